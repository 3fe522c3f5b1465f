"""Estimator-style front end.

:class:`LamAnnealer` follows the scikit-learn parameter conventions
(``get_params``/``set_params``/``clone``), so solver configurations can be
copied and varied like any other estimator. ``fit`` optimises the given
problem and stores the outcome in trailing-underscore attributes.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .executor import ExecutorConfig, run, run_sequential_deterministic
from .problem import OptimizationProblem
from .scheduling import SchedulingInstance, SchedulingProblem, preprocess, restore_permutation, weighted_tardiness
from .schedules import RestartSchedule


class LamAnnealer(BaseEstimator):
    """Multistart Modified Lam annealing with a restart-length schedule.

    Parameters
    ----------
    schedule : str
        ``"val"``, ``"pval"``, ``"pval0"`` or ``"fal:<length>"``.
    n_instances : int
        Number of annealers run side by side.
    budget_evals, budget_secs : int or float
        Exactly one must be set.
    snapshot_every : int or float, optional
        Snapshot interval in the budget's unit.
    reanneal : bool
        Start every restart after the first from the global best.
    random_state : int
        Base seed of all random streams.
    mode : {"auto", "deterministic", "threaded"}
        ``"auto"`` runs round-robin on one thread for evaluation budgets and
        threaded for wall-clock budgets.
    engine : {"auto", "python", "jit"}
    preprocess : bool
        Reduce :class:`SchedulingInstance` inputs before solving. Reported
        solutions always use the original job indices.

    Attributes
    ----------
    best_solution_ : ndarray or object
    best_cost_ : int or float
    record_ : RunRecord
    n_evaluations_ : int
    index_map_ : ndarray
        Only for scheduling inputs: original index of every kept job.
    """

    def __init__(
        self,
        schedule="val",
        n_instances=1,
        budget_evals=None,
        budget_secs=None,
        snapshot_every=None,
        reanneal=False,
        random_state=0,
        mode="auto",
        engine="auto",
        preprocess=True,
    ):
        self.schedule = schedule
        self.n_instances = n_instances
        self.budget_evals = budget_evals
        self.budget_secs = budget_secs
        self.snapshot_every = snapshot_every
        self.reanneal = reanneal
        self.random_state = random_state
        self.mode = mode
        self.engine = engine
        self.preprocess = preprocess

    def _config(self):
        schedule = self.schedule
        if not isinstance(schedule, RestartSchedule):
            schedule = RestartSchedule.parse(schedule)
        return ExecutorConfig(
            schedule=schedule,
            n_instances=self.n_instances,
            budget_evals=self.budget_evals,
            budget_secs=self.budget_secs,
            snapshot_every=self.snapshot_every,
            reanneal=self.reanneal,
            base_seed=self.random_state,
        )

    def fit(self, X, y=None):
        """Optimise ``X``, an :class:`OptimizationProblem` or a
        :class:`SchedulingInstance`."""
        config = self._config()
        if self.mode not in ("auto", "deterministic", "threaded"):
            raise ValueError(f"unknown mode {self.mode!r}")
        deterministic = self.mode == "deterministic" or (self.mode == "auto" and config.budget_evals is not None)

        instance = None
        if isinstance(X, SchedulingInstance):
            instance = X
            if self.preprocess:
                reduced, self.index_map_ = preprocess(instance)
            else:
                reduced, self.index_map_ = instance, np.arange(instance.n)
            problem = SchedulingProblem(reduced)
        elif isinstance(X, OptimizationProblem):
            problem = X
        else:
            raise TypeError("X must be an OptimizationProblem or a SchedulingInstance")

        runner = run_sequential_deterministic if deterministic else run
        record = runner(problem, config, engine=self.engine)
        self.record_ = record
        self.n_evaluations_ = record.evaluations
        if instance is not None:
            self.best_solution_ = restore_permutation(record.best_solution, self.index_map_, instance.n)
            self.best_cost_ = weighted_tardiness(instance, self.best_solution_)
        else:
            self.best_solution_ = record.best_solution
            self.best_cost_ = record.best_cost
        return self

    def best_at(self, elapsed):
        """Best cost found by ``elapsed`` (in the budget's unit)."""
        check_is_fitted(self, "record_")
        return self.record_.best_at(elapsed)
