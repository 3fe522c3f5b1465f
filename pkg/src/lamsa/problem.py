"""Problem contract consumed by the annealer, plus permutation moves."""
from __future__ import annotations

import abc

import numpy as np
from numba import njit

from .rng import RandomSource, _randbelow
from .validation import check_permutation, check_positive_int


class OptimizationProblem(abc.ABC):
    """Minimisation problem as seen by the annealer.

    Implementations must make ``cost`` total and deterministic. Solutions are
    treated as values: ``random_neighbor`` returns a new object and never
    mutates its argument.
    """

    @abc.abstractmethod
    def cost(self, solution):
        ...

    @abc.abstractmethod
    def random_solution(self, rng: RandomSource):
        ...

    @abc.abstractmethod
    def random_neighbor(self, solution, rng: RandomSource):
        ...

    def copy_solution(self, solution):
        return solution.copy()


@njit(cache=True, nogil=True)
def _fill_random_permutation(out, s):
    n = out.shape[0]
    for k in range(n):
        out[k] = k
    for k in range(n - 1, 0, -1):
        j = _randbelow(s, k + 1)
        tmp = out[k]
        out[k] = out[j]
        out[j] = tmp


@njit(cache=True, nogil=True)
def _insertion_move(src, dst, remove, insert):
    # dst = src with element at `remove` relocated so that it ends up at `insert`.
    elem = src[remove]
    if remove < insert:
        for k in range(remove):
            dst[k] = src[k]
        for k in range(remove, insert):
            dst[k] = src[k + 1]
        dst[insert] = elem
        for k in range(insert + 1, src.shape[0]):
            dst[k] = src[k]
    else:
        for k in range(insert):
            dst[k] = src[k]
        dst[insert] = elem
        for k in range(insert + 1, remove + 1):
            dst[k] = src[k - 1]
        for k in range(remove + 1, src.shape[0]):
            dst[k] = src[k]


@njit(cache=True, nogil=True)
def _random_insertion(src, dst, s):
    n = src.shape[0]
    remove = _randbelow(s, n)
    insert = _randbelow(s, n - 1)
    if insert >= remove:
        insert += 1
    _insertion_move(src, dst, remove, insert)


def random_permutation(n: int, rng: RandomSource) -> np.ndarray:
    """Uniform random permutation of ``0..n-1`` (Fisher-Yates)."""
    n = check_positive_int(n, "n")
    out = np.empty(n, dtype=np.int64)
    _fill_random_permutation(out, rng.state)
    return out


def apply_insertion(perm, remove: int, insert: int) -> np.ndarray:
    """Move the element at index ``remove`` so it lands at index ``insert``.

    ``insert`` indexes the resulting sequence, so ``insert == remove`` is the
    identity move.
    """
    src = np.asarray(perm, dtype=np.int64)
    n = src.shape[0]
    if not (0 <= remove < n and 0 <= insert < n):
        raise IndexError("move indices out of range")
    dst = np.empty_like(src)
    _insertion_move(src, dst, remove, insert)
    return dst


def insertion_mutation(perm, rng: RandomSource) -> np.ndarray:
    """Insertion Mutation: remove a uniformly chosen element and reinsert it
    at a uniformly chosen different position.

    The insertion point is drawn from the ``n - 1`` positions that differ from
    the removal index, so the result always differs from ``perm``.
    """
    src = np.asarray(perm, dtype=np.int64)
    if src.shape[0] < 2:
        raise ValueError("insertion mutation needs at least 2 elements")
    dst = np.empty_like(src)
    _random_insertion(src, dst, rng.state)
    return dst


class PermutationProblem(OptimizationProblem):
    """Problem over permutations of ``0..n-1`` with the Insertion Mutation
    neighbourhood.

    Subclasses that also provide ``jit_cost`` (a numba-compiled
    ``cost(perm, data)``) and ``jit_data`` run on the compiled annealing
    kernels; the Python methods remain the reference behaviour.
    """

    jit_cost = None
    cost_dtype = np.float64

    def __init__(self, n: int):
        self.n = check_positive_int(n, "n")

    @property
    def jit_data(self):
        return None

    @property
    def supports_jit(self) -> bool:
        return self.jit_cost is not None and self.jit_data is not None

    def random_solution(self, rng):
        return random_permutation(self.n, rng)

    def random_neighbor(self, solution, rng):
        if self.n < 2:
            return solution.copy()
        return insertion_mutation(solution, rng)

    def check_solution(self, solution):
        return check_permutation(solution, self.n)


@njit(cache=True, nogil=True)
def _footrule_cost(perm, data):
    target = data[0]
    total = 0
    for k in range(perm.shape[0]):
        diff = perm[k] - target[k]
        total += diff if diff >= 0 else -diff
    return total


class FootruleProblem(PermutationProblem):
    """Spearman footrule distance to a hidden target permutation.

    Costs change gradually under insertion moves, which makes this a handy
    smooth test landscape. The optimum is 0, reached at the target.
    """

    jit_cost = staticmethod(_footrule_cost)
    cost_dtype = np.int64

    def __init__(self, target):
        target = check_permutation(target)
        super().__init__(target.shape[0])
        self.target = target
        self.target.setflags(write=False)

    @classmethod
    def random(cls, n: int, rng: RandomSource) -> "FootruleProblem":
        return cls(random_permutation(n, rng))

    @property
    def jit_data(self):
        return (self.target,)

    def cost(self, solution):
        return int(np.abs(np.asarray(solution, dtype=np.int64) - self.target).sum())
