"""Simulated annealing under the Modified Lam adaptive schedule.

Temperature is steered every evaluation so that the smoothed acceptance rate
follows a target curve: close to 1 at the start, a plateau at 0.44 between
15% and 65% of the run, then an exponential decline to 0.001.

Two engines execute the same loop. The Python engine works with any
:class:`~lamsa.problem.OptimizationProblem`; the compiled engine handles
:class:`~lamsa.problem.PermutationProblem` subclasses that ship a jitted cost
function. For a given seed both produce bit-identical runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numba import njit

from .problem import OptimizationProblem, PermutationProblem, _random_insertion
from .rng import RandomSource, _next_double
from .validation import check_fraction, check_positive_int, check_random_source

INITIAL_TEMPERATURE = 0.5
INITIAL_ACCEPT_RATE = 0.5
TARGET_RATE = 0.44
COOLING = 0.999
# exp() below this argument is treated as probability 0.
EXP_FLOOR = -745.0

TRACE_COLUMNS = (
    "evalIndex", "temperature", "acceptRate", "lamRate", "currentCost", "bestCost", "accepted",
)


def _lam_rate(fraction):
    if fraction < 0.15:
        return 0.44 + 0.56 * 560.0 ** (-fraction / 0.15)
    if fraction < 0.65:
        return 0.44
    return 0.44 * 440.0 ** (-(fraction - 0.65) / 0.35)


def _update_accept_rate(accept_rate, accepted):
    if accepted:
        return (499.0 * accept_rate + 1.0) / 500.0
    return (499.0 * accept_rate) / 500.0


def _update_temperature(temperature, accept_rate, lam_rate):
    if accept_rate > lam_rate:
        return COOLING * temperature
    return temperature / COOLING


def _metropolis(cost_current, cost_neighbor, temperature, u):
    if cost_neighbor <= cost_current:
        return True
    arg = (cost_current - cost_neighbor) / temperature
    if arg < EXP_FLOOR:
        return False
    return u < math.exp(arg)


_jit_lam_rate = njit(cache=True, nogil=True)(_lam_rate)
_jit_update_accept_rate = njit(cache=True, nogil=True)(_update_accept_rate)
_jit_update_temperature = njit(cache=True, nogil=True)(_update_temperature)
_jit_metropolis = njit(cache=True, nogil=True)(_metropolis)


def lam_rate(fraction: float) -> float:
    """Target acceptance rate at ``fraction`` of the way through a run."""
    return _lam_rate(check_fraction(fraction, "fraction"))


def update_accept_rate(accept_rate: float, accepted: bool) -> float:
    """Exponentially smoothed acceptance rate with memory 499/500."""
    return _update_accept_rate(check_fraction(accept_rate, "accept_rate"), accepted)


def update_temperature(temperature: float, accept_rate: float, lam_rate: float) -> float:
    """Cool by 0.999 when accepting more than the target, otherwise heat.

    Equality heats.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    return _update_temperature(temperature, accept_rate, lam_rate)


def metropolis_accept(cost_current, cost_neighbor, temperature: float, uniform_draw: float) -> bool:
    """Metropolis test; non-worsening neighbours are always accepted."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    if not 0.0 <= uniform_draw < 1.0:
        raise ValueError("uniform_draw must lie in [0, 1)")
    return _metropolis(cost_current, cost_neighbor, temperature, uniform_draw)


@dataclass
class AnnealerState:
    """Mutable state of one Modified Lam run.

    ``eval_index`` counts evaluations already performed (0 before the first
    step, ``max_evals`` when the run is complete).
    """

    current: Any
    current_cost: Any
    best: Any
    best_cost: Any
    max_evals: int
    temperature: float = INITIAL_TEMPERATURE
    accept_rate: float = INITIAL_ACCEPT_RATE
    eval_index: int = 0
    accepted: int = 0

    @classmethod
    def start(cls, problem: OptimizationProblem, initial, max_evals: int) -> "AnnealerState":
        cost = problem.cost(initial)
        return cls(
            current=initial,
            current_cost=cost,
            best=problem.copy_solution(initial),
            best_cost=cost,
            max_evals=max_evals,
        )

    @property
    def done(self) -> bool:
        return self.eval_index >= self.max_evals


def lam_step(problem: OptimizationProblem, state: AnnealerState, rng: RandomSource) -> bool:
    """Perform one evaluation in place; return True if the run's best improved.

    The uniform draw for the Metropolis test is consumed only for worsening
    neighbours.
    """
    neighbor = problem.random_neighbor(state.current, rng)
    neighbor_cost = problem.cost(neighbor)
    if neighbor_cost <= state.current_cost:
        accept = True
    else:
        accept = _metropolis(state.current_cost, neighbor_cost, state.temperature, rng.random())
    improved = False
    if accept:
        state.current = neighbor
        state.current_cost = neighbor_cost
        state.accepted += 1
        if neighbor_cost < state.best_cost:
            state.best = problem.copy_solution(neighbor)
            state.best_cost = neighbor_cost
            improved = True
    state.accept_rate = _update_accept_rate(state.accept_rate, accept)
    state.eval_index += 1
    target = _lam_rate(state.eval_index / state.max_evals)
    state.temperature = _update_temperature(state.temperature, state.accept_rate, target)
    return improved


# Compiled engine. Per-run state lives in small arrays so that the executor
# can hold many runs side by side:
#   fst = [temperature, accept_rate]
#   ist = [eval_index, max_evals, accepted]
#   cst = [current_cost, best_cost]


@njit(cache=True, nogil=True)
def _jit_step(cost_fn, data, cur, nbr, best, cst, fst, ist, s):
    n = cur.shape[0]
    if n >= 2:
        _random_insertion(cur, nbr, s)
    else:
        nbr[:] = cur
    c_new = cost_fn(nbr, data)
    c_cur = cst[0]
    temperature = fst[0]
    if c_new <= c_cur:
        accept = True
    else:
        accept = _jit_metropolis(c_cur, c_new, temperature, _next_double(s))
    improved = False
    if accept:
        for k in range(n):
            cur[k] = nbr[k]
        cst[0] = c_new
        ist[2] += 1
        if c_new < cst[1]:
            for k in range(n):
                best[k] = nbr[k]
            cst[1] = c_new
            improved = True
    rate = _jit_update_accept_rate(fst[1], accept)
    fst[1] = rate
    ist[0] += 1
    target = _jit_lam_rate(ist[0] / ist[1])
    fst[0] = _jit_update_temperature(temperature, rate, target)
    return improved


@njit(cache=True, nogil=True)
def _jit_begin(cost_fn, data, cur, best, cst, fst, ist, max_evals):
    c = cost_fn(cur, data)
    cst[0] = c
    cst[1] = c
    for k in range(cur.shape[0]):
        best[k] = cur[k]
    fst[0] = 0.5
    fst[1] = 0.5
    ist[0] = 0
    ist[1] = max_evals
    ist[2] = 0


@njit(cache=True, nogil=True)
def _jit_advance(cost_fn, data, cur, nbr, best, cst, fst, ist, s, nsteps, trace, trace_every):
    """Run up to ``nsteps`` evaluations; returns the number performed."""
    done = 0
    row = ist[0] // trace_every if trace_every > 0 else 0
    while done < nsteps and ist[0] < ist[1]:
        _jit_step(cost_fn, data, cur, nbr, best, cst, fst, ist, s)
        done += 1
        if trace_every > 0 and ist[0] % trace_every == 0 and row < trace.shape[0]:
            trace[row, 0] = ist[0]
            trace[row, 1] = fst[0]
            trace[row, 2] = fst[1]
            trace[row, 3] = _jit_lam_rate(ist[0] / ist[1])
            trace[row, 4] = cst[0]
            trace[row, 5] = cst[1]
            trace[row, 6] = ist[2]
            row += 1
    return done


@dataclass
class AnnealStats:
    evaluations: int
    accepted: int
    final_temperature: float
    final_accept_rate: float
    trace: np.ndarray | None = field(default=None, repr=False)

    def write_trace(self, fh) -> None:
        """Write the trace as comma-separated rows with a header line."""
        if self.trace is None:
            raise ValueError("no trace was recorded")
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in self.trace:
            fh.write(
                f"{int(row[0])},{row[1]!r},{row[2]!r},{row[3]!r},"
                f"{_fmt_cost(row[4])},{_fmt_cost(row[5])},{int(row[6])}\n"
            )


def _fmt_cost(value):
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


@dataclass
class AnnealResult:
    best: Any
    best_cost: Any
    stats: AnnealStats


def _resolve_engine(problem, engine):
    if engine not in ("auto", "python", "jit"):
        raise ValueError(f"unknown engine {engine!r}")
    jit_ok = isinstance(problem, PermutationProblem) and problem.supports_jit
    if engine == "jit" and not jit_ok:
        raise ValueError("problem does not provide a compiled cost function")
    if engine == "auto":
        return "jit" if jit_ok else "python"
    return engine


def anneal(
    problem: OptimizationProblem,
    max_evals: int,
    initial=None,
    rng=None,
    *,
    trace_every: int | None = None,
    engine: str = "auto",
) -> AnnealResult:
    """One Modified Lam run of exactly ``max_evals`` evaluations.

    Parameters
    ----------
    problem : OptimizationProblem
    max_evals : int
        Annealing length. Each evaluation is one neighbour draw plus one cost
        evaluation; evaluating ``initial`` is not counted.
    initial : solution, optional
        Starting point; drawn with ``problem.random_solution(rng)`` if omitted.
    rng : RandomSource or int, optional
    trace_every : int, optional
        Record one trace row every this many evaluations.
    engine : {"auto", "python", "jit"}

    Returns
    -------
    AnnealResult
        Best solution seen (the initial one included) and run statistics.
    """
    max_evals = check_positive_int(max_evals, "max_evals")
    rng = check_random_source(rng)
    if trace_every is not None:
        trace_every = check_positive_int(trace_every, "trace_every")
    engine = _resolve_engine(problem, engine)
    if initial is None:
        initial = problem.random_solution(rng)
    n_rows = max_evals // trace_every if trace_every else 0

    if engine == "jit":
        cur = np.array(initial, dtype=np.int64)
        nbr = np.empty_like(cur)
        best = np.empty_like(cur)
        cst = np.empty(2, dtype=problem.cost_dtype)
        fst = np.empty(2, dtype=np.float64)
        ist = np.empty(3, dtype=np.int64)
        trace = np.zeros((max(n_rows, 1), len(TRACE_COLUMNS)))
        cost_fn, data = problem.jit_cost, problem.jit_data
        _jit_begin(cost_fn, data, cur, best, cst, fst, ist, max_evals)
        _jit_advance(cost_fn, data, cur, nbr, best, cst, fst, ist, rng.state,
                     max_evals, trace, trace_every or 0)
        stats = AnnealStats(int(ist[0]), int(ist[2]), float(fst[0]), float(fst[1]),
                            trace[:n_rows] if trace_every else None)
        return AnnealResult(best, cst[1].item(), stats)

    state = AnnealerState.start(problem, initial, max_evals)
    rows = []
    while not state.done:
        lam_step(problem, state, rng)
        if trace_every and state.eval_index % trace_every == 0:
            rows.append((
                state.eval_index, state.temperature, state.accept_rate,
                _lam_rate(state.eval_index / max_evals),
                state.current_cost, state.best_cost, state.accepted,
            ))
    trace = np.array(rows, dtype=np.float64).reshape(-1, len(TRACE_COLUMNS)) if trace_every else None
    stats = AnnealStats(state.eval_index, state.accepted, state.temperature, state.accept_rate, trace)
    return AnnealResult(state.best, state.best_cost, stats)
