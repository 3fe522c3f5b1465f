"""Multistart execution of Modified Lam annealers under a restart schedule.

Each annealer ``i`` of ``N`` performs restarts ``r = 0, 1, ...`` with
annealing length ``schedule.length(i, r, N)``. Restart ``(i, r)`` draws from
its own random stream, seeded from ``(base_seed, i, r)``, and starts from a
fresh random solution, or from the global best when reannealing (``r >= 1``).
Annealers never exchange anything else; the shared best store only serves
reporting and reannealing.

Two execution modes exist:

* :func:`run_sequential_deterministic` multiplexes the annealers round-robin
  on one thread, one evaluation per turn, under an evaluation budget. Results
  are bit-reproducible.
* :func:`run` uses one thread per annealer with either an evaluation budget
  or a wall-clock budget, sampling the shared best at fixed intervals.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numba import njit

from .annealing import AnnealerState, _jit_advance, _jit_begin, _jit_step, _resolve_engine, lam_step
from .exceptions import ExecutorError
from .problem import OptimizationProblem, _fill_random_permutation
from .rng import RandomSource, _derive_seed, _seed_state
from .schedules import MAX_EXPONENT, RestartSchedule

_MASK64 = (1 << 64) - 1

RECORD_SNAPSHOT_HEADER = "elapsed,bestCost"
RECORD_RESTART_HEADER = "instance,restart,length,bestOfRun,evals,initialCost,startedAt"


@dataclass(frozen=True)
class ExecutorConfig:
    """Execution settings.

    Exactly one of ``budget_evals`` and ``budget_secs`` must be given.
    ``snapshot_every`` uses the budget's unit and defaults to 1 second or to
    one sixtieth of the evaluation budget.
    """

    schedule: RestartSchedule
    n_instances: int = 1
    budget_evals: int | None = None
    budget_secs: float | None = None
    snapshot_every: float | None = None
    reanneal: bool = False
    base_seed: int = 0
    chunk: int | None = None

    def __post_init__(self):
        if isinstance(self.schedule, str):
            object.__setattr__(self, "schedule", RestartSchedule.parse(self.schedule))
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        if (self.budget_evals is None) == (self.budget_secs is None):
            raise ValueError("give exactly one of budget_evals and budget_secs")
        if self.budget_evals is not None and self.budget_evals <= 0:
            raise ValueError("budget_evals must be positive")
        if self.budget_secs is not None and not self.budget_secs > 0:
            raise ValueError("budget_secs must be positive")
        if self.snapshot_every is None:
            default = 1.0 if self.budget_secs is not None else max(1, self.budget_evals // 60)
            object.__setattr__(self, "snapshot_every", default)
        if not self.snapshot_every > 0:
            raise ValueError("snapshot_every must be positive")
        if self.budget_evals is not None:
            object.__setattr__(self, "snapshot_every", max(1, int(self.snapshot_every)))

    @property
    def unit(self) -> str:
        return "evals" if self.budget_evals is not None else "seconds"


class SharedBest:
    """Best solution across all annealers.

    Only strict improvements replace the stored solution, so the cost never
    increases. Reads and updates are guarded by a lock held only for a copy.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.solution = None
        self.cost = None
        self.found_at = None
        self.found_by = None
        self.history: list[tuple[Any, Any, int]] = []

    def offer(self, solution, cost, at, by) -> bool:
        if self.cost is not None and not cost < self.cost:
            return False
        with self._lock:
            if self.cost is not None and not cost < self.cost:
                return False
            self.solution = solution.copy()
            self.cost = cost
            self.found_at = at
            self.found_by = by
            self.history.append((at, cost, by))
            return True

    def read(self):
        """Consistent ``(cost, solution copy)`` pair."""
        with self._lock:
            if self.solution is None:
                return None, None
            return self.cost, self.solution.copy()


@dataclass
class RestartEntry:
    instance: int
    restart: int
    length: int
    evals: int
    best_cost: Any
    initial_cost: Any = None
    started_at: float | None = None

    @property
    def truncated(self) -> bool:
        return self.evals < self.length


@dataclass
class RunRecord:
    """Outcome of one executor run.

    ``elapsed`` values are evaluation counts (summed over annealers) in
    ``"evals"`` mode and seconds since start in ``"seconds"`` mode.
    ``improvements`` lists every strict improvement of the global best as
    ``(elapsed, cost, instance)``.
    """

    unit: str
    elapsed: float
    evaluations: int
    best_solution: Any
    best_cost: Any
    found_at: float
    found_by: int
    snapshots: list = field(default_factory=list)
    improvements: list = field(default_factory=list)
    restarts: list = field(default_factory=list)

    def best_at(self, elapsed):
        """Best cost known at ``elapsed`` (improvement at exactly ``elapsed`` included)."""
        if elapsed > self.elapsed:
            raise ValueError(f"checkpoint {elapsed} lies beyond the recorded range ({self.elapsed})")
        best = None
        for at, cost, _ in self.improvements:
            if at > elapsed:
                break
            best = cost
        if best is None:
            raise ValueError(f"no solution had been found by checkpoint {elapsed}")
        return best

    def first_reaching(self, threshold):
        """Elapsed value at which the best first became <= ``threshold`` (None if never)."""
        for at, cost, _ in self.improvements:
            if cost <= threshold:
                return at
        return None

    def instance_log(self, instance: int) -> list:
        return [e for e in self.restarts if e.instance == instance]

    def write_csv(self, fh) -> None:
        fh.write(f"# unit={self.unit} elapsed={self.elapsed} evaluations={self.evaluations}\n")
        fh.write("# snapshots\n")
        fh.write(RECORD_SNAPSHOT_HEADER + "\n")
        for at, cost in self.snapshots:
            fh.write(f"{at},{cost}\n")
        fh.write("# restarts\n")
        fh.write(RECORD_RESTART_HEADER + "\n")
        for e in self.restarts:
            fh.write(f"{e.instance},{e.restart},{e.length},{e.best_cost},{e.evals},"
                     f"{e.initial_cost},{e.started_at}\n")


def read_record_csv(fh) -> tuple[list, list]:
    """Parse the sections written by :meth:`RunRecord.write_csv`.

    Returns ``(snapshots, restarts)``.
    """
    snapshots, restarts = [], []
    target = None
    for raw in fh:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == RECORD_SNAPSHOT_HEADER:
            target = snapshots
            continue
        if line == RECORD_RESTART_HEADER:
            target = restarts
            continue
        if target is None:
            raise ValueError(f"row outside any section: {line!r}")
        fields = [_number(v) for v in line.split(",")]
        if target is snapshots:
            snapshots.append(tuple(fields))
        else:
            i, r, length, best, evals, initial, started = fields
            restarts.append(RestartEntry(i, r, length, evals, best, initial, started))
    return snapshots, restarts


def _number(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def _check_problem(problem):
    if not isinstance(problem, OptimizationProblem):
        raise TypeError("problem must implement OptimizationProblem")


# Deterministic round-robin mode.


def run_sequential_deterministic(problem: OptimizationProblem, config: ExecutorConfig, *, engine="auto") -> RunRecord:
    """Round-robin execution of all annealers on the calling thread.

    Annealer ``i`` performs its ``t``-th evaluation in round ``t``; within a
    round annealers take turns in index order. Stops after exactly
    ``config.budget_evals`` evaluations.
    """
    return _round_robin(problem, config, list(range(config.n_instances)), engine)


def run_worker(problem: OptimizationProblem, config: ExecutorConfig, instance: int, *, engine="auto") -> RunRecord:
    """Run annealer ``instance`` alone for ``config.budget_evals`` evaluations,
    with the lengths and seeds it would have inside the full ensemble."""
    if not 0 <= instance < config.n_instances:
        raise ValueError("instance index out of range")
    return _round_robin(problem, config, [instance], engine)


def _round_robin(problem, config, worker_ids, engine):
    _check_problem(problem)
    if config.budget_evals is None:
        raise ValueError("deterministic mode needs an evaluation budget")
    engine = _resolve_engine(problem, engine)
    if engine == "jit":
        return _round_robin_jit(problem, config, worker_ids)
    return _round_robin_python(problem, config, worker_ids)


def _round_robin_python(problem, config, worker_ids):
    schedule, n_inst = config.schedule, config.n_instances
    budget, every = config.budget_evals, config.snapshot_every
    shared = SharedBest()
    restarts, snapshots = [], []
    states, rngs, restart_idx = {}, {}, {w: 0 for w in worker_ids}
    started = {}
    total = 0

    def begin(w):
        r = restart_idx[w]
        rng = RandomSource.for_stream(config.base_seed, w, r)
        if config.reanneal and r > 0:
            _, initial = shared.read()
        else:
            initial = problem.random_solution(rng)
        state = AnnealerState.start(problem, initial, schedule.capped_length(w, r, n_inst))
        states[w], rngs[w] = state, rng
        started[w] = (state.current_cost, total)
        shared.offer(state.best, state.best_cost, total, w)

    def close(w):
        s = states[w]
        restarts.append(RestartEntry(w, restart_idx[w], s.max_evals, s.eval_index, s.best_cost, *started[w]))

    for w in worker_ids:
        begin(w)
    while total < budget:
        for w in worker_ids:
            if total >= budget:
                break
            if states[w].done:
                close(w)
                restart_idx[w] += 1
                begin(w)
            if lam_step(problem, states[w], rngs[w]):
                shared.offer(states[w].best, states[w].best_cost, total + 1, w)
            total += 1
            if total % every == 0:
                snapshots.append((total, shared.cost))
    for w in worker_ids:
        close(w)
    if not snapshots or snapshots[-1][0] != total:
        snapshots.append((total, shared.cost))
    restarts.sort(key=lambda e: (e.instance, e.restart))
    return RunRecord(
        unit="evals", elapsed=total, evaluations=total,
        best_solution=shared.solution, best_cost=shared.cost,
        found_at=shared.found_at, found_by=shared.found_by,
        snapshots=snapshots, improvements=list(shared.history), restarts=restarts,
    )


@njit(cache=True)
def _jit_length(kind, fixed, i, r, n_inst):
    if kind == 0:
        return fixed
    if kind == 1:
        e = r
    elif kind == 2:
        e = i + r * n_inst
    else:
        e = i % 4 + r * min(n_inst, 4)
    if e > MAX_EXPONENT:
        e = MAX_EXPONENT
    return 1000 * (np.int64(1) << np.int64(e))


@njit(cache=True)
def _grow(arr):
    out = np.zeros((arr.shape[0] * 2, arr.shape[1]))
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True)
def _round_robin_kernel(cost_fn, data, worker_ids, n_inst, kind, fixed, budget, every,
                        reanneal, base_seed, cur, nbr, best, cst, fst, ist, rs,
                        shared_perm, shared_cst):
    n_w = worker_ids.shape[0]
    restart_idx = np.zeros(n_w, dtype=np.int64)
    # history rows: (elapsed, cost, instance)
    # log rows: (instance, restart, length, evals, best, initial cost, start)
    hist = np.zeros((64, 3))
    n_hist = 0
    log = np.zeros((64, 7))
    begun = np.zeros((n_w, 2))
    n_log = 0
    snaps = np.zeros((budget // every + 2, 2))
    n_snap = 0
    have_shared = False
    found_at = 0
    found_by = -1
    total = 0

    for slot in range(-n_w, budget):
        # Negative slots start the first restart of every annealer.
        if slot < 0:
            k = slot + n_w
            starting = True
        else:
            if total >= budget:
                break
            k = slot % n_w
            starting = ist[k, 0] >= ist[k, 1]
            if starting:
                if n_log == log.shape[0]:
                    log = _grow(log)
                log[n_log, 0] = worker_ids[k]
                log[n_log, 1] = restart_idx[k]
                log[n_log, 2] = ist[k, 1]
                log[n_log, 3] = ist[k, 0]
                log[n_log, 4] = cst[k, 1]
                log[n_log, 5] = begun[k, 0]
                log[n_log, 6] = begun[k, 1]
                n_log += 1
                restart_idx[k] += 1
        w = worker_ids[k]
        if starting:
            r = restart_idx[k]
            _seed_state(rs[k], _derive_seed(base_seed, w, r))
            if reanneal and r > 0:
                cur[k, :] = shared_perm
            else:
                _fill_random_permutation(cur[k], rs[k])
            _jit_begin(cost_fn, data, cur[k], best[k], cst[k], fst[k], ist[k],
                       _jit_length(kind, fixed, w, r, n_inst))
            begun[k, 0] = cst[k, 0]
            begun[k, 1] = total
            if not have_shared or cst[k, 1] < shared_cst[0]:
                have_shared = True
                shared_cst[0] = cst[k, 1]
                shared_perm[:] = best[k]
                if n_hist == hist.shape[0]:
                    hist = _grow(hist)
                hist[n_hist, 0] = total
                hist[n_hist, 1] = cst[k, 1]
                hist[n_hist, 2] = w
                n_hist += 1
                found_at = total
                found_by = w
            if slot < 0:
                continue
        improved = _jit_step(cost_fn, data, cur[k], nbr[k], best[k], cst[k], fst[k], ist[k], rs[k])
        total += 1
        if improved and cst[k, 1] < shared_cst[0]:
            shared_cst[0] = cst[k, 1]
            shared_perm[:] = best[k]
            if n_hist == hist.shape[0]:
                hist = _grow(hist)
            hist[n_hist, 0] = total
            hist[n_hist, 1] = cst[k, 1]
            hist[n_hist, 2] = w
            n_hist += 1
            found_at = total
            found_by = w
        if total % every == 0:
            snaps[n_snap, 0] = total
            snaps[n_snap, 1] = shared_cst[0]
            n_snap += 1

    for k in range(n_w):
        if n_log == log.shape[0]:
            log = _grow(log)
        log[n_log, 0] = worker_ids[k]
        log[n_log, 1] = restart_idx[k]
        log[n_log, 2] = ist[k, 1]
        log[n_log, 3] = ist[k, 0]
        log[n_log, 4] = cst[k, 1]
        log[n_log, 5] = begun[k, 0]
        log[n_log, 6] = begun[k, 1]
        n_log += 1
    if n_snap == 0 or snaps[n_snap - 1, 0] != total:
        snaps[n_snap, 0] = total
        snaps[n_snap, 1] = shared_cst[0]
        n_snap += 1
    return total, found_at, found_by, hist[:n_hist], log[:n_log], snaps[:n_snap]


def _round_robin_jit(problem, config, worker_ids):
    n, n_w = problem.n, len(worker_ids)
    dtype = problem.cost_dtype
    cur = np.empty((n_w, n), dtype=np.int64)
    nbr = np.empty_like(cur)
    best = np.empty_like(cur)
    cst = np.empty((n_w, 2), dtype=dtype)
    fst = np.empty((n_w, 2))
    ist = np.empty((n_w, 3), dtype=np.int64)
    rs = np.empty((n_w, 4), dtype=np.uint64)
    shared_perm = np.empty(n, dtype=np.int64)
    shared_cst = np.empty(1, dtype=dtype)
    schedule = config.schedule
    total, found_at, found_by, hist, log, snaps = _round_robin_kernel(
        problem.jit_cost, problem.jit_data, np.array(worker_ids, dtype=np.int64),
        config.n_instances, schedule.code, schedule.fixed_length or 0,
        config.budget_evals, config.snapshot_every, config.reanneal,
        np.uint64(config.base_seed & _MASK64),
        cur, nbr, best, cst, fst, ist, rs, shared_perm, shared_cst,
    )
    cast = dtype(0).item().__class__
    restarts = [
        RestartEntry(int(i), int(r), int(length), int(evals), cast(c), cast(c0), int(at))
        for i, r, length, evals, c, c0, at in log
    ]
    restarts.sort(key=lambda e: (e.instance, e.restart))
    return RunRecord(
        unit="evals", elapsed=int(total), evaluations=int(total),
        best_solution=shared_perm, best_cost=shared_cst[0].item(),
        found_at=int(found_at), found_by=int(found_by),
        snapshots=[(int(a), cast(c)) for a, c in snaps],
        improvements=[(int(a), cast(c), int(b)) for a, c, b in hist],
        restarts=restarts,
    )


# Threaded mode.


class _PythonWorker:
    def __init__(self, problem):
        self.problem = problem
        self.state = None
        self.rng = None

    def begin(self, initial, length, rng):
        self.rng = rng
        self.state = AnnealerState.start(self.problem, initial, length)

    def advance(self, k):
        done = 0
        s = self.state
        while done < k and not s.done:
            lam_step(self.problem, s, self.rng)
            done += 1
        return done

    @property
    def done(self):
        return self.state.done

    def remaining(self):
        return self.state.max_evals - self.state.eval_index

    def best(self):
        return self.state.best, self.state.best_cost

    def evals(self):
        return self.state.eval_index

    def length(self):
        return self.state.max_evals


class _JitWorker:
    _no_trace = np.zeros((1, 1))

    def __init__(self, problem):
        n = problem.n
        self.cost_fn, self.data = problem.jit_cost, problem.jit_data
        self.cur = np.empty(n, dtype=np.int64)
        self.nbr = np.empty(n, dtype=np.int64)
        self.best_perm = np.empty(n, dtype=np.int64)
        self.cst = np.empty(2, dtype=problem.cost_dtype)
        self.fst = np.empty(2)
        self.ist = np.empty(3, dtype=np.int64)
        self.rng = None

    def begin(self, initial, length, rng):
        self.rng = rng
        self.cur[:] = initial
        _jit_begin(self.cost_fn, self.data, self.cur, self.best_perm, self.cst, self.fst, self.ist, length)

    def advance(self, k):
        return _jit_advance(self.cost_fn, self.data, self.cur, self.nbr, self.best_perm, self.cst,
                            self.fst, self.ist, self.rng.state, k, self._no_trace, 0)

    @property
    def done(self):
        return self.ist[0] >= self.ist[1]

    def remaining(self):
        return int(self.ist[1] - self.ist[0])

    def best(self):
        return self.best_perm, self.cst[1].item()

    def evals(self):
        return int(self.ist[0])

    def length(self):
        return int(self.ist[1])


class _Budget:
    """Evaluation counter shared by threads; hands out chunks until exhausted."""

    def __init__(self, limit, every):
        self.limit = limit
        self.every = every
        self.used = 0
        self.lock = threading.Lock()

    def reserve(self, k):
        with self.lock:
            take = min(k, self.limit - self.used)
            self.used += take
            return take


def run(problem: OptimizationProblem, config: ExecutorConfig, *, engine="auto") -> RunRecord:
    """Run ``config.n_instances`` annealers on separate threads.

    Compiled annealers release the GIL while evaluating. When the budget runs
    out every annealer stops; a restart cut short still contributes its best
    solution. In evaluation-budget mode the total number of evaluations equals
    the budget exactly, and snapshots are taken at chunk granularity.
    """
    _check_problem(problem)
    engine = _resolve_engine(problem, engine)
    make_worker = _JitWorker if engine == "jit" else _PythonWorker
    chunk = config.chunk or (10_000 if engine == "jit" else 250)
    schedule, n_inst = config.schedule, config.n_instances
    shared = SharedBest()
    stop = threading.Event()
    errors = []
    restarts, snapshots = [], []
    log_lock = threading.Lock()
    wall = config.budget_secs is not None
    budget = None if wall else _Budget(config.budget_evals, config.snapshot_every)
    next_snap = [config.snapshot_every]
    start = time.perf_counter()

    def now():
        if wall:
            return time.perf_counter() - start
        return budget.used

    def account():
        # Evaluation mode: record snapshots for every boundary crossed so far.
        with log_lock:
            while next_snap[0] <= budget.used and shared.cost is not None:
                snapshots.append((next_snap[0], shared.cost))
                next_snap[0] += config.snapshot_every

    def worker_loop(w):
        worker = make_worker(problem)
        r = 0
        try:
            while not stop.is_set():
                rng = RandomSource.for_stream(config.base_seed, w, r)
                if config.reanneal and r > 0:
                    _, initial = shared.read()
                else:
                    initial = problem.random_solution(rng)
                worker.begin(initial, schedule.capped_length(w, r, n_inst), rng)
                begun = (worker.best()[1], now())
                shared.offer(*worker.best(), begun[1], w)
                while not worker.done and not stop.is_set():
                    k = min(chunk, worker.remaining())
                    if budget is not None:
                        k = budget.reserve(k)
                        if k == 0:
                            stop.set()
                            break
                    before = worker.best()[1]
                    worker.advance(k)
                    sol, cost = worker.best()
                    if cost < before:
                        shared.offer(sol, cost, now(), w)
                    if budget is not None:
                        account()
                if worker.evals() > 0:
                    with log_lock:
                        restarts.append(RestartEntry(w, r, worker.length(), worker.evals(), worker.best()[1], *begun))
                r += 1
        except BaseException as exc:  # noqa: BLE001 - reported to the caller
            errors.append((w, exc))
            stop.set()

    def sampler():
        k = 1
        while not stop.wait(max(0.0, start + k * config.snapshot_every - time.perf_counter())):
            if shared.cost is not None:
                with log_lock:
                    snapshots.append((k * config.snapshot_every, shared.cost))
            k += 1

    threads = [threading.Thread(target=worker_loop, args=(w,), daemon=True) for w in range(n_inst)]
    sample_thread = threading.Thread(target=sampler, daemon=True) if wall else None
    for t in threads:
        t.start()
    if wall:
        sample_thread.start()
        stop.wait(config.budget_secs)
        stop.set()
    for t in threads:
        t.join()
    if sample_thread is not None:
        sample_thread.join()
    if errors:
        w, exc = errors[0]
        raise ExecutorError(f"annealer {w} failed: {exc!r}") from exc
    if shared.solution is None:
        raise ExecutorError("no annealer produced a solution before the budget expired")

    elapsed = now()
    if wall:
        snapshots = [s for s in snapshots if s[0] <= elapsed]
        evaluations = sum(e.evals for e in restarts)
    else:
        evaluations = budget.used
        account()
    if not snapshots or snapshots[-1][0] != elapsed:
        snapshots.append((elapsed, shared.cost))
    restarts.sort(key=lambda e: (e.instance, e.restart))
    return RunRecord(
        unit=config.unit, elapsed=elapsed, evaluations=evaluations,
        best_solution=shared.solution, best_cost=shared.cost,
        found_at=shared.found_at, found_by=shared.found_by,
        snapshots=snapshots, improvements=sorted(shared.history, key=lambda h: h[0]),
        restarts=restarts,
    )
