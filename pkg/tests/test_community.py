import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bipbackbone import DegenerateGraphError, detect_communities, modularity
from oracles import (
    KNOWN_LOCAL_OPTIMA,
    best_modularity,
    community_fixtures,
    naive_modularity,
    two_triangles_bridge,
)


def csr(a):
    return sp.csr_matrix(a)


def test_two_triangles_modularity():
    a = two_triangles_bridge()
    assert modularity(csr(a), [0, 0, 0, 1, 1, 1]) == pytest.approx(5 / 14, abs=1e-15)


def test_single_community_is_zero():
    a = two_triangles_bridge()
    assert modularity(csr(a), [0] * 6) == pytest.approx(0, abs=1e-15)


def test_singletons_formula():
    a = two_triangles_bridge()
    d = a.sum(axis=1)
    expected = -np.sum((d / d.sum()) ** 2)
    assert modularity(csr(a), list(range(6))) == pytest.approx(expected, abs=1e-15)
    assert expected < 0


def test_edgeless_modularity_rejected():
    with pytest.raises(DegenerateGraphError):
        modularity(csr(np.zeros((3, 3))), [0, 0, 1])


def test_assignment_must_cover_nodes():
    with pytest.raises(ValueError):
        modularity(csr(two_triangles_bridge()), [0, 1])


def test_detect_two_triangles():
    part = detect_communities(csr(two_triangles_bridge()))
    assert part.community_count == 2
    assert sorted(map(sorted, part.communities())) == [[0, 1, 2], [3, 4, 5]]
    assert part.modularity == pytest.approx(5 / 14, abs=1e-12)


@pytest.mark.parametrize("n", [3, 5, 10])
def test_complete_graph_is_one_community(n):
    a = np.ones((n, n)) - np.eye(n)
    part = detect_communities(csr(a))
    assert part.community_count == 1
    assert part.modularity == pytest.approx(0, abs=1e-12)


def test_isolated_node_is_singleton():
    a = np.zeros((4, 4))
    for i, j in [(1, 2), (2, 3), (1, 3)]:
        a[i, j] = a[j, i] = 1
    part = detect_communities(csr(a))
    groups = sorted(map(sorted, part.communities()))
    assert [0] in groups
    assert part.community_count == 2


def test_edgeless_graph_gives_singletons():
    part = detect_communities(csr(np.zeros((3, 3))))
    assert part.community_count == 3
    assert np.isnan(part.modularity)


def random_graph(n, p, seed, weighted=False):
    rng = np.random.default_rng(seed)
    a = np.triu((rng.random((n, n)) < p).astype(float), 1)
    if weighted:
        a *= rng.integers(1, 6, size=a.shape)
    return a + a.T


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.floats(0.1, 0.8), st.integers(0, 10**6), st.booleans())
def test_modularity_matches_double_sum(n, p, seed, weighted):
    a = random_graph(n, p, seed, weighted)
    if a.sum() == 0:
        return
    assignment = np.random.default_rng(seed).integers(0, 3, n)
    assert modularity(csr(a), assignment) == pytest.approx(naive_modularity(a, assignment), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.floats(0.05, 0.6), st.integers(0, 10**6))
def test_detected_partition_properties(n, p, seed):
    a = random_graph(n, p, seed, weighted=True)
    if a.sum() == 0:
        return
    part = detect_communities(csr(a))
    assert part.modularity >= -1e-12
    assert -1 <= part.modularity <= 1
    assert part.modularity == pytest.approx(modularity(csr(a), part.assignment), abs=1e-9)
    assert sorted(set(part.assignment.tolist())) == list(range(part.community_count))


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 25), st.integers(0, 10**6))
def test_relabelling_nodes_permutes_assignment(n, seed):
    a = random_graph(n, 0.3, seed, weighted=True)
    if a.sum() == 0:
        return
    perm = np.random.default_rng(seed + 1).permutation(n)
    base = detect_communities(csr(a))
    moved = detect_communities(csr(a[np.ix_(perm, perm)]))
    assert moved.modularity == pytest.approx(base.modularity, abs=1e-12)
    # same partition up to community names
    same_base = base.assignment[perm][:, None] == base.assignment[perm][None, :]
    same_moved = moved.assignment[:, None] == moved.assignment[None, :]
    assert np.array_equal(same_base, same_moved)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 25), st.integers(0, 10**6), st.sampled_from([0.5, 2.0, 7.0]))
def test_weight_scaling_invariance(n, seed, c):
    a = random_graph(n, 0.3, seed, weighted=True)
    if a.sum() == 0:
        return
    assignment = np.random.default_rng(seed).integers(0, 3, n)
    assert modularity(csr(c * a), assignment) == pytest.approx(modularity(csr(a), assignment), abs=1e-12)
    assert np.array_equal(detect_communities(csr(c * a)).assignment, detect_communities(csr(a)).assignment)


@pytest.mark.parametrize("name,a", community_fixtures(), ids=[n for n, _ in community_fixtures()])
def test_brute_force_oracle(name, a):
    part = detect_communities(csr(a))
    best = best_modularity(a)
    if name in KNOWN_LOCAL_OPTIMA:
        detected, optimum = KNOWN_LOCAL_OPTIMA[name]
        assert part.modularity == pytest.approx(detected, abs=1e-9)
        assert best == pytest.approx(optimum, abs=1e-9)
        assert part.modularity < best
    else:
        assert part.modularity == pytest.approx(best, abs=1e-9)


def test_power_iteration_path_agrees_with_dense(monkeypatch):
    from bipbackbone import community

    a = np.zeros((40, 40))
    blocks = [range(0, 20), range(20, 40)]
    rng = np.random.default_rng(3)
    for blk in blocks:
        for i, j in itertools.combinations(blk, 2):
            if rng.random() < 0.5:
                a[i, j] = a[j, i] = 1
    a[0, 39] = a[39, 0] = 1
    dense = detect_communities(csr(a))
    monkeypatch.setattr(community, "DENSE_LIMIT", 1)
    power = detect_communities(csr(a))
    assert power.modularity == pytest.approx(dense.modularity, abs=1e-9)
    assert np.array_equal(power.assignment, dense.assignment)
