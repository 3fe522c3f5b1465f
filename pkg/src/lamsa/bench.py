"""Repeated runs over an instance set and anytime quality curves."""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from sklearn.base import clone

from .exceptions import UndefinedMetricError
from .metrics import count_optimal, pct_delta_opt, pct_delta_optsum
from .rng import seed_derivation
from .scheduling import SchedulingInstance, preprocess

log = logging.getLogger(__name__)

CURVE_HEADER = "checkpoint,pctDeltaOpt,pctDeltaOptSum,numOptimal"


@dataclass
class BenchmarkResult:
    """Run records of one solver configuration over an instance set.

    ``optima[name]`` is ``None`` when the optimum is unknown; such instances
    are left out of every optimum-based metric.
    """

    per_instance: dict = field(default_factory=dict)
    optima: dict = field(default_factory=dict)
    eliminated: dict = field(default_factory=dict)

    def final_costs(self) -> dict:
        return {name: [rec.best_cost for rec in runs] for name, runs in self.per_instance.items()}


@dataclass(frozen=True)
class CurveRow:
    checkpoint: float
    pct_delta_opt: float
    pct_delta_optsum: float
    num_optimal: int


def run_benchmark(
    instances: Mapping[str, SchedulingInstance],
    estimator,
    repetitions: int,
    optima: Mapping | None = None,
    base_seed: int = 0,
) -> BenchmarkResult:
    """Fit a clone of ``estimator`` ``repetitions`` times on every instance.

    Repetition ``k`` of the ``j``-th instance uses seed
    ``seed_derivation(base_seed, k, j)``.
    """
    optima = dict(optima or {})
    result = BenchmarkResult()
    for j, (name, instance) in enumerate(instances.items()):
        if optima.get(name) is None:
            log.warning("no known optimum for instance %s; excluded from optimum-based metrics", name)
        result.optima[name] = optima.get(name)
        result.eliminated[name] = instance.n - preprocess(instance)[0].n
        runs = []
        for k in range(repetitions):
            est = clone(estimator).set_params(random_state=seed_derivation(base_seed, k, j))
            est.fit(instance)
            runs.append(est.record_)
        result.per_instance[name] = runs
    return result


def _metric_or_nan(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetricError:
        return math.nan


def anytime_curves(benchmark: BenchmarkResult, checkpoints: Sequence) -> list[CurveRow]:
    """One row of metrics per checkpoint.

    Costs are averaged over repetitions per instance before the percentage
    metrics are applied; the optimum count is over individual runs. Metrics
    that are undefined for the instance set are reported as NaN.
    """
    rows = []
    for checkpoint in checkpoints:
        mean_cost, per_run = {}, {}
        for name, runs in benchmark.per_instance.items():
            try:
                costs = [rec.best_at(checkpoint) for rec in runs]
            except ValueError as exc:
                raise ValueError(f"checkpoint {checkpoint}: {exc}") from None
            mean_cost[name] = sum(costs) / len(costs)
            per_run[name] = costs
        rows.append(CurveRow(
            checkpoint,
            _metric_or_nan(pct_delta_opt, mean_cost, benchmark.optima),
            _metric_or_nan(pct_delta_optsum, mean_cost, benchmark.optima),
            count_optimal(per_run, benchmark.optima),
        ))
    return rows


def write_curves(rows: Sequence[CurveRow], fh) -> None:
    fh.write(CURVE_HEADER + "\n")
    for row in rows:
        fh.write(f"{row.checkpoint},{row.pct_delta_opt!r},{row.pct_delta_optsum!r},{row.num_optimal}\n")


def write_raw_runs(benchmark: BenchmarkResult, checkpoints: Sequence, fh) -> None:
    """Per-run best-so-far costs, for external significance testing."""
    fh.write("instance,repetition,checkpoint,bestCost\n")
    for name, runs in benchmark.per_instance.items():
        for k, rec in enumerate(runs):
            for checkpoint in checkpoints:
                fh.write(f"{name},{k},{checkpoint},{rec.best_at(checkpoint)}\n")
