from collections import Counter, deque
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamsa import FootruleProblem, PermutationProblem, RandomSource, insertion_mutation, random_permutation
from lamsa.problem import apply_insertion
from lamsa.validation import check_permutation


def _reference_insertion(perm, remove, insert):
    seq = list(perm)
    elem = seq.pop(remove)
    seq.insert(insert, elem)
    return seq


def _neighbors(perm):
    n = len(perm)
    return {tuple(_reference_insertion(perm, r, p)) for r in range(n) for p in range(n) if p != r}


def test_random_permutation_single():
    assert random_permutation(1, RandomSource(0)).tolist() == [0]


def test_random_permutation_rejects_zero():
    with pytest.raises(ValueError):
        random_permutation(0, RandomSource(0))


def test_random_permutation_two_frequency():
    rng = RandomSource(17)
    counts = Counter(tuple(random_permutation(2, rng)) for _ in range(10000))
    assert set(counts) == {(0, 1), (1, 0)}
    assert abs(counts[(0, 1)] / 10000 - 0.5) <= 0.02


def test_random_permutation_uniform_over_all_of_s4():
    rng = RandomSource(3)
    draws = 24 * 1000
    counts = Counter(tuple(random_permutation(4, rng)) for _ in range(draws))
    assert len(counts) == 24
    chi2 = sum((c - 1000) ** 2 / 1000 for c in counts.values())
    # 23 degrees of freedom, p = 0.001 critical value 49.73
    assert chi2 < 49.73


def test_random_permutation_deterministic():
    assert random_permutation(30, RandomSource(8)).tolist() == random_permutation(30, RandomSource(8)).tolist()


@given(st.integers(1, 60), st.integers(0, 2**64 - 1))
def test_random_permutation_is_bijection(n, seed):
    check_permutation(random_permutation(n, RandomSource(seed)), n)


def test_insertion_two_elements_forced():
    for seed in range(20):
        assert insertion_mutation([0, 1], RandomSource(seed)).tolist() == [1, 0]


def test_insertion_hand_traced():
    assert apply_insertion([0, 1, 2, 3, 4], 1, 4).tolist() == [0, 2, 3, 4, 1]
    assert apply_insertion([0, 1, 2, 3, 4], 4, 0).tolist() == [4, 0, 1, 2, 3]
    assert apply_insertion([0, 1, 2, 3, 4], 2, 2).tolist() == [0, 1, 2, 3, 4]


def test_apply_insertion_range_checked():
    with pytest.raises(IndexError):
        apply_insertion([0, 1, 2], 3, 0)


def test_insertion_matches_list_reference_exhaustively():
    base = [3, 0, 4, 1, 2]
    for r in range(5):
        for p in range(5):
            assert apply_insertion(base, r, p).tolist() == _reference_insertion(base, r, p)


def test_n4_enumeration_never_identity():
    perm = [0, 1, 2, 3]
    results = [_reference_insertion(perm, r, p) for r in range(4) for p in range(4) if p != r]
    assert len(results) == 12
    assert perm not in results


def test_insertion_rejects_short():
    with pytest.raises(ValueError):
        insertion_mutation([0], RandomSource(0))


def test_neighbor_distribution_matches_move_multiplicities():
    # Adjacent swaps arise from two (r, p) pairs, every other move from one.
    n = 5
    perm = list(range(n))
    expected = Counter(
        tuple(_reference_insertion(perm, r, p)) for r in range(n) for p in range(n) if p != r
    )
    total_moves = n * (n - 1)
    rng = RandomSource(21)
    draws = 40000
    seen = Counter(tuple(insertion_mutation(perm, rng)) for _ in range(draws))
    assert set(seen) == set(expected)
    for nb, mult in expected.items():
        p = mult / total_moves
        sd = (p * (1 - p) / draws) ** 0.5
        assert abs(seen[nb] / draws - p) < 5 * sd


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_neighborhood_symmetric(n):
    for perm in permutations(range(n)):
        for nb in _neighbors(perm):
            assert perm in _neighbors(nb)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_neighborhood_connected_within_n_minus_1(n):
    start = tuple(range(n))
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nb in _neighbors(cur):
            if nb not in dist:
                dist[nb] = dist[cur] + 1
                queue.append(nb)
    assert len(dist) == len(list(permutations(range(n))))
    assert max(dist.values()) <= n - 1


@settings(max_examples=300)
@given(st.permutations(list(range(12))), st.integers(0, 2**64 - 1))
def test_insertion_property(perm, seed):
    out = insertion_mutation(perm, RandomSource(seed))
    check_permutation(out, 12)
    assert out.tolist() != list(perm)
    diff = [a != b for a, b in zip(out.tolist(), perm)]
    # Only a contiguous block between the two move indices changes.
    idx = [k for k, d in enumerate(diff) if d]
    assert idx == list(range(idx[0], idx[-1] + 1))


def test_insertion_does_not_mutate_input():
    perm = np.arange(6)
    insertion_mutation(perm, RandomSource(1))
    assert perm.tolist() == list(range(6))


class _Identity(PermutationProblem):
    def cost(self, solution):
        return 0


def test_permutation_problem_degenerate_neighbor():
    prob = _Identity(1)
    sol = prob.random_solution(RandomSource(0))
    assert prob.random_neighbor(sol, RandomSource(0)).tolist() == [0]


def test_check_permutation_errors():
    with pytest.raises(ValueError):
        check_permutation([0, 0, 1])
    with pytest.raises(ValueError):
        check_permutation([0, 1, 3])
    with pytest.raises(ValueError):
        check_permutation([0, 1], 3)
    with pytest.raises(ValueError):
        check_permutation([[0, 1]])


def test_footrule_cost():
    prob = FootruleProblem([2, 0, 1])
    assert prob.cost([2, 0, 1]) == 0
    assert prob.cost([0, 1, 2]) == 4
    assert prob.jit_cost(np.array([0, 1, 2]), prob.jit_data) == 4
    assert prob.supports_jit and not _Identity(3).supports_jit
