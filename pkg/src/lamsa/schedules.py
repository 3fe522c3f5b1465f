"""Annealing-length schedules for multistart Modified Lam runs.

``val``    1000 * 2**r for restart r of a single annealer.
``pval0``  1000 * 2**(i + r*N) for annealer i of N.
``pval``   1000 * 2**((i mod 4) + r*min(N, 4)); same as ``pval0`` for N <= 4.
``fal:L``  a constant length L.

The completion-time helpers count evaluations, assuming every evaluation
costs the same.
"""
from __future__ import annotations

from dataclasses import dataclass

from .exceptions import ScheduleExhausted
from .validation import check_positive_int

BASE_LENGTH = 1000
GROWTH = 2
INT64_MAX = 2**63 - 1
# Largest exponent x with BASE_LENGTH * GROWTH**x <= INT64_MAX.
MAX_EXPONENT = 53
MAX_LENGTH = BASE_LENGTH * GROWTH**MAX_EXPONENT

KINDS = ("fal", "val", "pval0", "pval")


def _scaled(exponent: int) -> int:
    if exponent > MAX_EXPONENT:
        raise ScheduleExhausted(f"{BASE_LENGTH}*{GROWTH}**{exponent} exceeds the 64-bit range")
    return BASE_LENGTH * GROWTH**exponent


def _check_instance(i, n_instances):
    n_instances = check_positive_int(n_instances, "n_instances")
    i = check_positive_int(i, "i", minimum=0)
    if i >= n_instances:
        raise ValueError(f"instance index {i} out of range for {n_instances} instances")
    return i, n_instances


def val_length(r: int) -> int:
    r = check_positive_int(r, "r", minimum=0)
    return _scaled(r)


def pval0_length(i: int, r: int, n_instances: int) -> int:
    i, n_instances = _check_instance(i, n_instances)
    r = check_positive_int(r, "r", minimum=0)
    return _scaled(i + r * n_instances)


def pval_length(i: int, r: int, n_instances: int) -> int:
    i, n_instances = _check_instance(i, n_instances)
    r = check_positive_int(r, "r", minimum=0)
    return _scaled(i % 4 + r * min(n_instances, 4))


def fal_length(fixed_length: int, r: int) -> int:
    check_positive_int(r, "r", minimum=0)
    return check_positive_int(fixed_length, "fixed_length")


def pval0_completion(i: int, r: int, n_instances: int) -> int:
    """Evaluations annealer ``i`` has used when its restart ``r`` finishes.

    Exact integer arithmetic; unlike the length functions this is not limited
    to the 64-bit range.
    """
    i, n_instances = _check_instance(i, n_instances)
    r = check_positive_int(r, "r", minimum=0)
    total = sum(BASE_LENGTH * GROWTH ** (i + j * n_instances) for j in range(r + 1))
    closed = BASE_LENGTH * 2**i * (2 ** (n_instances * (r + 1)) - 1) // (2**n_instances - 1)
    assert total == closed, (i, r, n_instances)
    return total


def sequential_completion(r0: int) -> int:
    """Evaluations a single VAL annealer has used when restart ``r0`` finishes."""
    r0 = check_positive_int(r0, "r0", minimum=0)
    total = sum(BASE_LENGTH * GROWTH**j for j in range(r0 + 1))
    assert total == BASE_LENGTH * (2 ** (r0 + 1) - 1), r0
    return total


def expected_speedup(i: int, r: int, n_instances: int) -> float:
    """Closed-form ratio of sequential to parallel completion time for the
    run of length ``1000 * 2**(i + r*N)``."""
    i, n_instances = _check_instance(i, n_instances)
    num = (2 ** (i + r * n_instances + 1) - 1) * (2**n_instances - 1)
    den = 2**i * (2 ** (n_instances * (r + 1)) - 1)
    return num / den


def speedup_limit(n_instances: int) -> float:
    """Limit of :func:`expected_speedup` as the restart count grows."""
    n_instances = check_positive_int(n_instances, "n_instances")
    return (2**n_instances - 1) / 2 ** (n_instances - 1)


@dataclass(frozen=True)
class RestartSchedule:
    kind: str
    fixed_length: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "fal":
            check_positive_int(self.fixed_length, "fixed_length")
        elif self.fixed_length is not None:
            raise ValueError("fixed_length only applies to 'fal'")

    @classmethod
    def parse(cls, text: str) -> "RestartSchedule":
        """Parse ``val``, ``pval``, ``pval0`` or ``fal:<length>``."""
        text = text.strip().lower()
        if text.startswith("fal:"):
            try:
                length = int(text[4:].replace("_", ""))
            except ValueError:
                raise ValueError(f"bad fixed length in {text!r}") from None
            return cls("fal", length)
        if text in ("val", "pval", "pval0"):
            return cls(text)
        raise ValueError(f"unknown schedule {text!r}; expected val, pval, pval0 or fal:<length>")

    def __str__(self):
        return f"fal:{self.fixed_length}" if self.kind == "fal" else self.kind

    @property
    def code(self) -> int:
        return KINDS.index(self.kind)

    def length(self, i: int, r: int, n_instances: int) -> int:
        """Annealing length of restart ``r`` for annealer ``i`` of ``n_instances``.

        Raises :class:`ScheduleExhausted` past the 64-bit range.
        """
        if self.kind == "fal":
            return fal_length(self.fixed_length, r)
        if self.kind == "val":
            i, _ = _check_instance(i, n_instances)
            return val_length(r)
        if self.kind == "pval0":
            return pval0_length(i, r, n_instances)
        return pval_length(i, r, n_instances)

    def capped_length(self, i: int, r: int, n_instances: int) -> int:
        """Like :meth:`length` but pinned at :data:`MAX_LENGTH` once exhausted."""
        try:
            return self.length(i, r, n_instances)
        except ScheduleExhausted:
            return MAX_LENGTH
