"""Single-machine weighted tardiness with sequence-dependent setups.

The setup matrix has ``n + 1`` rows and ``n`` columns. Row 0 holds the
initial setups (job first on the machine); row ``i + 1`` holds the setups
incurred when a job directly follows job ``i``. Entry ``setup[k + 1, k]`` is
never used.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import InstanceParseError
from .problem import PermutationProblem
from .rng import RandomSource
from .validation import check_fraction, check_permutation, check_positive_int


def _as_frozen(values, name, shape):
    arr = np.array(values, dtype=np.int64)
    if arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    if arr.size and arr.min() < 0:
        raise ValueError(f"{name} contains negative values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SchedulingInstance:
    process: np.ndarray
    weight: np.ndarray
    duedate: np.ndarray
    setup: np.ndarray

    def __post_init__(self):
        n = len(self.process)
        if n < 1:
            raise ValueError("an instance needs at least one job")
        for name, shape in (("process", (n,)), ("weight", (n,)), ("duedate", (n,)), ("setup", (n + 1, n))):
            object.__setattr__(self, name, _as_frozen(getattr(self, name), name, shape))

    @property
    def n(self) -> int:
        return self.process.shape[0]

    def setup_time(self, prev: int | None, job: int) -> int:
        """Setup before ``job`` when it follows ``prev`` (``None`` = first)."""
        return int(self.setup[0 if prev is None else prev + 1, job])

    def __eq__(self, other):
        if not isinstance(other, SchedulingInstance):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("process", "weight", "duedate", "setup")
        )

    __hash__ = None


@njit(cache=True, nogil=True)
def _weighted_tardiness(perm, data):
    process, weight, duedate, setup = data
    t = 0
    total = 0
    row = 0
    for pos in range(perm.shape[0]):
        job = perm[pos]
        t += setup[row, job] + process[job]
        late = t - duedate[job]
        if late > 0:
            total += weight[job] * late
        row = job + 1
    return total


def weighted_tardiness(instance: SchedulingInstance, perm) -> int:
    """Total weighted tardiness of processing the jobs in ``perm`` order."""
    perm = check_permutation(perm, instance.n)
    return int(_weighted_tardiness(perm, _instance_data(instance)))


def _instance_data(instance):
    return (instance.process, instance.weight, instance.duedate, instance.setup)


class SchedulingProblem(PermutationProblem):
    jit_cost = staticmethod(_weighted_tardiness)
    cost_dtype = np.int64

    def __init__(self, instance: SchedulingInstance):
        super().__init__(instance.n)
        self.instance = instance
        self._data = _instance_data(instance)

    @property
    def jit_data(self):
        return self._data

    def cost(self, solution):
        return int(_weighted_tardiness(solution, self._data))


def preprocess(instance: SchedulingInstance) -> tuple[SchedulingInstance, np.ndarray]:
    """Fold minimum setups into processing times and drop dominated
    zero-weight jobs.

    Each job's smallest incoming setup is added to its processing time and
    subtracted from its column, which leaves every schedule's completion
    times unchanged. A zero-weight job is then removed when visiting it between
    any two other jobs is never shorter than going directly, so it can always
    be sequenced last at no cost.

    Returns the reduced instance and ``index_map``, where ``index_map[j]`` is
    the original index of reduced job ``j``.
    """
    n = instance.n
    process = instance.process.copy()
    setup = instance.setup.copy()
    for k in range(n):
        incoming = [setup[i, k] for i in range(n + 1) if i != k + 1]
        smin = min(incoming)
        process[k] += smin
        for i in range(n + 1):
            if i != k + 1:
                setup[i, k] -= smin

    keep = [k for k in range(n) if not (instance.weight[k] == 0 and _dominated(k, process, setup))]
    if not keep:
        # Everything has weight 0: keep one job so the instance stays valid.
        keep = [0]
    keep_arr = np.array(keep, dtype=np.int64)
    rows = np.concatenate(([0], keep_arr + 1))
    reduced = SchedulingInstance(
        process=process[keep_arr],
        weight=instance.weight[keep_arr],
        duedate=instance.duedate[keep_arr],
        setup=setup[np.ix_(rows, keep_arr)],
    )
    return reduced, keep_arr


def _dominated(k, process, setup):
    n = process.shape[0]
    # x ranges over the start state (row 0) and every other job; y over other jobs.
    predecessors = [0] + [x + 1 for x in range(n) if x != k]
    for row in predecessors:
        via_k = setup[row, k] + process[k]
        for y in range(n):
            if y == k or row == y + 1:
                continue
            if via_k + setup[k + 1, y] < setup[row, y]:
                return False
    return True


def restore_permutation(perm, index_map, n_original: int) -> np.ndarray:
    """Map a schedule of the reduced instance back to original job indices.

    Eliminated jobs are appended at the end in increasing index order.
    """
    index_map = np.asarray(index_map, dtype=np.int64)
    head = index_map[np.asarray(perm, dtype=np.int64)]
    dropped = np.setdiff1d(np.arange(n_original, dtype=np.int64), index_map)
    return np.concatenate((head, dropped))


def generate_instance(
    n: int,
    duedate_tightness: float,
    duedate_range: float,
    setup_ratio: float,
    rng: RandomSource,
) -> SchedulingInstance:
    """Random instance in the style of the standard benchmark generator.

    Processing times are uniform on [50, 150), weights on [0, 10] and setups
    on [0, 100 * setup_ratio). Due dates are uniform on an interval of width
    ``duedate_range * M`` centred at ``(1 - duedate_tightness) * M``, where
    ``M`` estimates the makespan, and are floored at 0.
    """
    n = check_positive_int(n, "n")
    tau = check_fraction(duedate_tightness, "duedate_tightness")
    spread = check_fraction(duedate_range, "duedate_range")
    if not setup_ratio >= 0:
        raise ValueError("setup_ratio must be non-negative")
    process = rng.integers(50, 150, n)
    weight = rng.integers(0, 11, n)
    setup_high = int(round(100 * setup_ratio))
    if setup_high > 0:
        setup = rng.integers(0, setup_high, (n + 1) * n).reshape(n + 1, n)
    else:
        setup = np.zeros((n + 1, n), dtype=np.int64)
    for k in range(n):
        setup[k + 1, k] = 0
    used = np.ones_like(setup, dtype=bool)
    used[np.arange(1, n + 1), np.arange(n)] = False
    makespan = float(process.sum()) + n * float(setup[used].mean())
    centre = (1.0 - tau) * makespan
    half = 0.5 * spread * makespan
    duedate = np.empty(n, dtype=np.int64)
    for k in range(n):
        d = centre - half + rng.random() * 2.0 * half if half > 0 else centre
        duedate[k] = max(0, int(np.floor(d)))
    return SchedulingInstance(process, weight, duedate, setup)


# Instance text format.

def serialize_instance(instance: SchedulingInstance) -> str:
    def line(tag, values):
        return " ".join([tag, *(str(int(v)) for v in values)])

    lines = [
        f"jobs {instance.n}",
        line("process", instance.process),
        line("weight", instance.weight),
        line("duedate", instance.duedate),
    ]
    lines.extend(line("setup", row) for row in instance.setup)
    return "\n".join(lines) + "\n"


def parse_instance(text) -> SchedulingInstance:
    """Parse the line-oriented instance format.

    ``#`` starts a comment; blank lines are ignored. Raises
    :class:`InstanceParseError` carrying the offending line number.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    records = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        content = raw.split("#", 1)[0].split()
        if content:
            records.append((lineno, content[0], content[1:]))
    if not records:
        raise InstanceParseError("empty instance")

    def ints(lineno, section, fields, count):
        if len(fields) != count:
            raise InstanceParseError(f"section '{section}' expects {count} values, found {len(fields)}", lineno)
        try:
            values = [int(f) for f in fields]
        except ValueError:
            raise InstanceParseError(f"section '{section}' contains a non-integer value", lineno) from None
        if any(v < 0 for v in values):
            raise InstanceParseError(f"section '{section}' contains a negative value", lineno)
        return values

    lineno, tag, fields = records[0]
    if tag != "jobs" or len(fields) != 1:
        raise InstanceParseError("expected header 'jobs <n>'", lineno)
    (n,) = ints(lineno, "jobs", fields, 1)
    if n < 1:
        raise InstanceParseError("job count must be positive", lineno)

    expected = ["process", "weight", "duedate"] + ["setup"] * (n + 1)
    body = records[1:]
    values = {}
    setup_rows = []
    for idx, section in enumerate(expected):
        if idx >= len(body):
            last = body[-1][0] if body else lineno
            raise InstanceParseError(f"missing section '{section}'", last)
        lineno, tag, fields = body[idx]
        if tag != section:
            raise InstanceParseError(f"expected section '{section}', found '{tag}'", lineno)
        row = ints(lineno, section, fields, n)
        if section == "setup":
            setup_rows.append(row)
        else:
            values[section] = row
    if len(body) > len(expected):
        raise InstanceParseError("unexpected trailing content", body[len(expected)][0])
    return SchedulingInstance(values["process"], values["weight"], values["duedate"], setup_rows)


def load_instance(path) -> SchedulingInstance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def save_instance(instance: SchedulingInstance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_instance(instance))


def load_optima(path) -> dict[str, int]:
    """Read ``<instance-name> <optimal-cost>`` lines."""
    optima = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            content = raw.split("#", 1)[0].split()
            if not content:
                continue
            if len(content) != 2:
                raise InstanceParseError("expected '<instance-name> <optimal-cost>'", lineno)
            name, value = content
            try:
                optima[name] = int(value)
            except ValueError:
                raise InstanceParseError(f"bad optimum {value!r}", lineno) from None
    return optima


def instance_name(path) -> str:
    return os.path.splitext(os.path.basename(path))[0]
