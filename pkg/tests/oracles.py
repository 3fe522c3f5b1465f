"""Independent reference implementations used as test oracles."""
from itertools import permutations

import numpy as np
from numba import njit


def double_sum_cost(process, weight, duedate, setup, perm):
    """Weighted tardiness with every completion time summed from scratch."""
    total = 0
    for q, job in enumerate(perm):
        completion = 0
        for j in range(q + 1):
            prev_row = 0 if j == 0 else perm[j - 1] + 1
            completion += setup[prev_row][perm[j]] + process[perm[j]]
        total += weight[job] * max(completion - duedate[job], 0)
    return total


def all_costs(instance):
    """Map every ordering to its double-sum cost (small n only)."""
    args = (instance.process, instance.weight, instance.duedate, instance.setup)
    return {perm: double_sum_cost(*args, perm) for perm in permutations(range(instance.n))}


@njit(cache=True)
def _position_cost(p, w, d, s, perm):
    n = perm.shape[0]
    total = 0
    for q in range(n):
        completion = s[0, perm[0]] + p[perm[0]]
        for j in range(1, q + 1):
            completion += s[perm[j - 1] + 1, perm[j]] + p[perm[j]]
        job = perm[q]
        if completion > d[job]:
            total += w[job] * (completion - d[job])
    return total


@njit(cache=True)
def _heap_minimum(p, w, d, s):
    n = p.shape[0]
    perm = np.arange(n)
    counter = np.zeros(n, np.int64)
    best = _position_cost(p, w, d, s, perm)
    i = 0
    while i < n:
        if counter[i] < i:
            k = 0 if i % 2 == 0 else counter[i]
            perm[k], perm[i] = perm[i], perm[k]
            v = _position_cost(p, w, d, s, perm)
            if v < best:
                best = v
            counter[i] += 1
            i = 0
        else:
            counter[i] = 0
            i += 1
    return best


def brute_force_optimum(instance):
    """Exhaustive minimum over all n! orderings (Heap's algorithm)."""
    return int(_heap_minimum(instance.process, instance.weight, instance.duedate,
                             np.ascontiguousarray(instance.setup)))
