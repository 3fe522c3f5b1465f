"""Modified Lam simulated annealing with variable-length restarts."""
from .annealing import anneal, lam_rate, metropolis_accept, update_accept_rate, update_temperature
from .bench import BenchmarkResult, anytime_curves, run_benchmark
from .estimator import LamAnnealer
from .exceptions import ExecutorError, InstanceParseError, ScheduleExhausted, UndefinedMetricError
from .executor import ExecutorConfig, RunRecord, SharedBest, run, run_sequential_deterministic, run_worker
from .metrics import count_optimal, pct_delta_opt, pct_delta_optsum
from .problem import (
    FootruleProblem,
    OptimizationProblem,
    PermutationProblem,
    insertion_mutation,
    random_permutation,
)
from .rng import RandomSource, seed_derivation
from .schedules import RestartSchedule
from .scheduling import (
    SchedulingInstance,
    SchedulingProblem,
    generate_instance,
    parse_instance,
    preprocess,
    serialize_instance,
    weighted_tardiness,
)

__all__ = [
    "BenchmarkResult",
    "ExecutorConfig",
    "ExecutorError",
    "FootruleProblem",
    "InstanceParseError",
    "LamAnnealer",
    "OptimizationProblem",
    "PermutationProblem",
    "RandomSource",
    "RestartSchedule",
    "RunRecord",
    "ScheduleExhausted",
    "SchedulingInstance",
    "SchedulingProblem",
    "SharedBest",
    "UndefinedMetricError",
    "anneal",
    "anytime_curves",
    "count_optimal",
    "generate_instance",
    "insertion_mutation",
    "lam_rate",
    "metropolis_accept",
    "parse_instance",
    "pct_delta_opt",
    "pct_delta_optsum",
    "preprocess",
    "random_permutation",
    "run",
    "run_benchmark",
    "run_sequential_deterministic",
    "run_worker",
    "seed_derivation",
    "serialize_instance",
    "update_accept_rate",
    "update_temperature",
    "weighted_tardiness",
]

__version__ = "0.1.0"
