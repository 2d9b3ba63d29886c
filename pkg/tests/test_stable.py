import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchmarket import MarriagePolicy, RngStream, build_affinity, run_trajectory
from matchmarket.errors import InvalidInstanceError, NoMatchedAgentsError
from matchmarket.stable import (
    BipartiteInstance,
    gale_shapley,
    matching_avg_utility,
    random_bipartition,
    verify_stability,
)
from matchmarket.stats import summarize_step

from conftest import GAUSS, dense


def reference_gale_shapley(P, R):
    """Textbook deferred acceptance on nested lists, proposer i -> reviewer j."""
    n = len(P)
    prefs = [sorted(range(n), key=lambda j: (-P[i][j], j)) for i in range(n)]
    nxt = [0] * n
    holder = [None] * n
    free = list(range(n))
    while free:
        i = free.pop(0)
        j = prefs[i][nxt[i]]
        nxt[i] += 1
        cur = holder[j]
        if cur is None:
            holder[j] = i
        elif (-R[j][i], i) < (-R[j][cur], cur):
            holder[j] = i
            free.append(cur)
        else:
            free.append(i)
    out = [None] * n
    for j, i in enumerate(holder):
        out[i] = j
    return out


def test_one_by_one():
    A = dense([[0.0, 3.0], [1.0, 0.0]])
    inst = BipartiteInstance([0], [1], A)
    m = gale_shapley(inst)
    assert m.assignment.tolist() == [0]
    assert m.u_gs == 2.0
    assert verify_stability(inst, m) == []


def test_two_by_two_forced():
    # proposers 0, 1; reviewers 2, 3; everyone's first choice is the index-lower one
    A = dense([
        [0, 0, 5, 1],
        [0, 0, 5, 1],
        [5, 1, 0, 0],
        [5, 1, 0, 0],
    ])
    m = gale_shapley(BipartiteInstance([0, 1], [2, 3], A))
    assert m.assignment.tolist() == [0, 1]


def test_three_by_three_blocking_pair():
    # identity matching p_i <-> r_i, but p1 and r2 rank each other first
    A = np.zeros((6, 6))
    P = [[1, 3, 2], [1, 2, 3], [3, 2, 1]]
    R = [[3, 2, 1], [3, 2, 1], [2, 1, 3]]
    for i in range(3):
        for j in range(3):
            A[i, 3 + j] = P[i][j]
            A[3 + j, i] = R[j][i]
    A = dense(A)
    inst = BipartiteInstance([0, 1, 2], [3, 4, 5], A)
    identity = np.array([3, 4, 5, 0, 1, 2])
    blocks = verify_stability(inst, identity)
    assert (0, 4) in blocks
    # exhaustive oracle over all 9 cross pairs
    want = [(p, r) for p in range(3) for r in range(3, 6)
            if A[p, r] > A[p, identity[p]] and A[r, p] > A[r, identity[r]]]
    assert sorted(blocks) == sorted(want)


def test_unequal_sides_rejected():
    A = dense(np.eye(5))
    with pytest.raises(InvalidInstanceError):
        BipartiteInstance([0, 1], [2, 3, 4], A)
    with pytest.raises(InvalidInstanceError):
        BipartiteInstance([0, 1], [1, 2], A)
    with pytest.raises(InvalidInstanceError):
        random_bipartition(5, RngStream(0))


def test_bipartition_is_a_split():
    p, r = random_bipartition(100, RngStream(0))
    assert p.size == r.size == 50
    assert np.array_equal(np.sort(np.concatenate([p, r])), np.arange(100))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), half=st.integers(1, 100))
def test_random_instances_stable(seed, half):
    rng = RngStream(seed)
    A = build_affinity(2 * half, GAUSS, GAUSS, rng)
    inst = BipartiteInstance(*random_bipartition(2 * half, rng), A)
    m = gale_shapley(inst)
    assert sorted(m.assignment.tolist()) == list(range(half))
    assert verify_stability(inst, m) == []
    assert m.proposals <= half * half


@pytest.mark.parametrize("seed", range(20))
def test_matches_reference_implementation(seed):
    g = np.random.default_rng(seed)
    n = int(g.integers(1, 25))
    A = dense(g.integers(0, 5, size=(2 * n, 2 * n)).astype(float))  # many ties
    inst = BipartiteInstance(np.arange(n), np.arange(n, 2 * n), A)
    P = inst.proposer_utilities().tolist()
    R = inst.reviewer_utilities().tolist()
    assert gale_shapley(inst).assignment.tolist() == reference_gale_shapley(P, R)


def test_proposer_side_does_better_on_average():
    diffs = []
    for seed in range(20):
        rng = RngStream(seed)
        A = build_affinity(200, GAUSS, GAUSS, rng)
        m = gale_shapley(BipartiteInstance(*random_bipartition(200, rng), A))
        diffs.append(m.proposer_mean - m.reviewer_mean)
    assert np.mean(diffs) > 0


def test_stochastic_final_matching_is_unstable():
    rng = RngStream(0)
    A = build_affinity(200, GAUSS, GAUSS, rng)
    final = run_trajectory(A, 100, MarriagePolicy.none(), rng=rng).final
    inst = BipartiteInstance(*random_bipartition(200, rng), A)
    assert len(verify_stability(inst, final.partner)) > 0


def test_avg_utility_single_pair():
    A = dense([[0.0, 1.0, 9.0], [3.0, 0.0, 9.0], [9.0, 9.0, 0.0]])
    assert matching_avg_utility(A, [1, 0, -1]) == 2.0


def test_avg_utility_empty():
    with pytest.raises(NoMatchedAgentsError):
        matching_avg_utility(dense(np.eye(3)), [-1, -1, -1])


def test_avg_utility_agrees_with_population_stats():
    A = build_affinity(500, GAUSS, GAUSS, RngStream(1))
    tr = run_trajectory(A, 20, MarriagePolicy.fixed(1.0), rng=RngStream(1))
    for s in tr.states[1:]:
        coupled = s.partner >= 0
        want = s.utilities[coupled].mean()
        assert matching_avg_utility(A, s.partner) == pytest.approx(want, rel=1e-12)


def test_u_gs_is_mean_of_both_sides():
    rng = RngStream(2)
    A = build_affinity(60, GAUSS, GAUSS, rng)
    inst = BipartiteInstance(*random_bipartition(60, rng), A)
    m = gale_shapley(inst)
    assert m.u_gs == pytest.approx(matching_avg_utility(A, m.partner_array(inst, 60)))
    assert m.u_gs == pytest.approx((m.proposer_mean + m.reviewer_mean) / 2)
