"""Argument checking helpers shared by the public entry points."""
from __future__ import annotations

import numbers

import numpy as np

from .rng import RandomSource


def check_random_source(seed) -> RandomSource:
    """Turn ``seed`` into a :class:`RandomSource`.

    ``None`` maps to seed 0 so that every default run is reproducible.
    An existing source is returned as-is (not copied).
    """
    if seed is None:
        return RandomSource(0)
    if isinstance(seed, RandomSource):
        return seed
    if isinstance(seed, numbers.Integral):
        return RandomSource(int(seed))
    raise ValueError(f"{seed!r} cannot be used to seed a RandomSource")


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_fraction(value, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_permutation(perm, n: int | None = None) -> np.ndarray:
    """Return ``perm`` as an int64 array after verifying it is a bijection on 0..n-1."""
    arr = np.asarray(perm)
    if arr.ndim != 1:
        raise ValueError("a permutation must be one-dimensional")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("a permutation must contain integers")
    arr = arr.astype(np.int64, copy=False)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"permutation has length {arr.shape[0]}, expected {n}")
    size = arr.shape[0]
    seen = np.zeros(size, dtype=bool)
    if size and (arr.min() < 0 or arr.max() >= size):
        raise ValueError("permutation entries out of range")
    seen[arr] = True
    if not seen.all():
        raise ValueError("permutation contains repeated entries")
    return arr
