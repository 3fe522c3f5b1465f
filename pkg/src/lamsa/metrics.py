"""Solution-quality metrics against known optima.

All functions take mappings keyed by instance name. Percentages are computed
in exact rational arithmetic and rounded to float once.
"""
from __future__ import annotations

from collections.abc import Mapping
from fractions import Fraction

from .exceptions import UndefinedMetricError


def _known(results, optima):
    return [name for name in results if optima.get(name) is not None]


def pct_delta_opt(results: Mapping, optima: Mapping) -> float:
    """Mean percentage deviation from the optimum over instances whose
    optimum is known and non-zero."""
    names = [name for name in _known(results, optima) if optima[name] > 0]
    if not names:
        raise UndefinedMetricError("no instance with a known non-zero optimum")
    total = sum(Fraction(results[name]) / Fraction(optima[name]) - 1 for name in names)
    return float(100 * total / len(names))


def pct_delta_optsum(results: Mapping, optima: Mapping) -> float:
    """Percentage deviation of the summed costs from the summed optima."""
    names = _known(results, optima)
    opt_sum = sum(optima[name] for name in names)
    if opt_sum <= 0:
        raise UndefinedMetricError("sum of optima is zero")
    found = sum(Fraction(results[name]) for name in names)
    return float(100 * (found - opt_sum) / Fraction(opt_sum))


def count_optimal(results: Mapping, optima: Mapping) -> int:
    """Number of runs that reached the optimum.

    ``results`` maps each instance to one cost or to a sequence of costs (one
    per repetition).
    """
    hits = 0
    for name in _known(results, optima):
        costs = results[name]
        if not isinstance(costs, (list, tuple)):
            costs = [costs]
        hits += sum(1 for c in costs if c == optima[name])
    return hits
