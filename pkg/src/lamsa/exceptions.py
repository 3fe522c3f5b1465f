class ScheduleExhausted(OverflowError):
    """Raised when an annealing length no longer fits in a signed 64-bit integer."""


class InstanceParseError(ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UndefinedMetricError(ValueError):
    pass


class ExecutorError(RuntimeError):
    pass
