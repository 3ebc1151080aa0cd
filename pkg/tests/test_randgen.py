import numpy as np
import pytest
from scipy import special

from bipbackbone import (
    DegreeDistributionSpec,
    degree_sequence,
    generate_bipartite,
    ks_test,
    monte_carlo_weight_distribution,
    project,
    sample_degree_sequence,
)
from bipbackbone.errors import DegenerateGraphError
from bipbackbone.randgen import configuration_bipartite, pair_weight_histogram


def spec(text):
    return DegreeDistributionSpec.parse(text)


def test_delta_sequence():
    assert sample_degree_sequence(spec("delta:3"), 5, 0).degrees.tolist() == [3] * 5


def test_degenerate_uniform():
    assert sample_degree_sequence(spec("uniform:1,1"), 4, 0).degrees.tolist() == [1] * 4


def test_powerlaw_mean_matches_zeta_ratio():
    expected = special.zeta(1.5) / special.zeta(2.5)
    d = sample_degree_sequence(spec("powerlaw:2.5,1"), 10_000, 123).degrees
    assert d.min() >= 1
    assert abs(d.mean() - expected) / expected < 0.05


@pytest.mark.parametrize("text", ["normal:10,2", "exp:0.1", "uniform:1,20", "powerlaw:2.5,1", "delta:5"])
def test_sequences_are_positive_capped_and_deterministic(text):
    a = sample_degree_sequence(spec(text), 500, 9, cap=15).degrees
    b = sample_degree_sequence(spec(text), 500, 9, cap=15).degrees
    assert np.array_equal(a, b)
    assert a.min() >= 1 and a.max() <= 15


@pytest.mark.parametrize("text", ["powerlaw:1.0,1", "exp:0", "exp:-1", "uniform:5,2", "normal:3,-1",
                                  "delta:0", "delta:2.5", "gamma:1", "uniform:1"])
def test_invalid_parameters(text):
    with pytest.raises(ValueError):
        spec(text)


def test_sample_rejects_empty():
    with pytest.raises(ValueError):
        sample_degree_sequence(spec("delta:1"), 0, 0)


def test_spec_aliases_and_str():
    assert spec("pl:2.5").family == "powerlaw"
    assert spec("pl:2.5").parameters == (2.5, 1.0)
    assert str(spec("exp:0.1")) == "exponential:0.1"


def test_delta_pairing_targets():
    gen = generate_bipartite(spec("delta:2"), spec("delta:2"), 4, 4, 11)
    assert gen.target_primary.tolist() == [2] * 4
    assert gen.target_secondary.tolist() == [2] * 4
    assert gen.deficit == 8 - gen.graph.edge_count
    assert gen.deficit >= 0


def test_same_seed_same_graph():
    a = generate_bipartite(spec("exp:0.3"), spec("powerlaw:2.5,1"), 50, 80, 5).graph
    b = generate_bipartite(spec("exp:0.3"), spec("powerlaw:2.5,1"), 50, 80, 5).graph
    assert a.edges() == b.edges()


def test_perfect_matching_has_empty_projection():
    gen = generate_bipartite(spec("delta:1"), spec("delta:1"), 30, 30, 2)
    assert gen.graph.edge_count == 30
    assert len(project(gen.graph)) == 0


def test_balancing_equalizes_sums():
    gen = generate_bipartite(spec("delta:1"), spec("delta:3"), 30, 10, 2)
    assert gen.target_primary.sum() == gen.target_secondary.sum() == 30
    assert gen.target_primary.max() <= 10


def test_infeasible_balance():
    from bipbackbone.randgen import _balance
    # the single secondary can take at most 2 stubs, the primaries demand 6
    j, k = np.array([3, 3]), np.array([1])
    with pytest.raises(DegenerateGraphError):
        _balance(j, k, np.random.default_rng(0))


def test_configuration_preserves_sequence_before_collapse():
    j = np.array([3, 1, 2, 2])
    k = np.array([2, 2, 2, 2])
    gen = configuration_bipartite(j, k, 4)
    realized_j = degree_sequence(gen.graph, "primary").degrees
    assert (j - realized_j).sum() == gen.deficit
    assert np.all(realized_j <= j)


@pytest.mark.parametrize("pdist,sdist", [("exp:0.5", "exp:1"), ("normal:4,1", "uniform:1,3"),
                                         ("delta:3", "powerlaw:3,1")])
def test_collapse_deficit_small_for_sparse_specs(pdist, sdist):
    fractions = []
    for seed in range(20):
        gen = generate_bipartite(spec(pdist), spec(sdist), 200, 400, seed)
        fractions.append(gen.deficit / gen.target_primary.sum())
    assert np.mean(fractions) <= 0.02


def test_ks_examples():
    assert ks_test([0.2, 0.3, 0.5], [0.2, 0.3, 0.5], 1000) == (0.0, 1.0)
    d, p = ks_test([1.0, 0.0], [0.0, 1.0], 10)
    assert d == 1.0 and p < 1e-6
    d, _ = ks_test([0.5, 0.3, 0.2], [0.3, 0.5, 0.2], 100)
    assert d == pytest.approx(0.2, abs=1e-15)
    with pytest.raises(ValueError):
        ks_test([], [], 10)
    with pytest.raises(ValueError):
        ks_test([1.0], [0.5, 0.5], 10)


def test_dense_pairing_rejected():
    res = monte_carlo_weight_distribution(spec("delta:200"), spec("delta:200"), 200, 400, 100, 42)
    assert res.ks_pvalue < 0.5


@pytest.mark.xfail(
    strict=True,
    reason="balancing lifts primaries to ~18 edges each; the heterogeneous pair weights form an "
    "overdispersed Poisson mixture (variance ~2.8 vs mean ~1.9) that KS rejects at 19900 pairs",
)
def test_powerlaw_exponential_defaults_accept():
    res = monte_carlo_weight_distribution(spec("powerlaw:2.5,1"), spec("exp:0.1"), 200, 400, 100, 7)
    assert res.ks_pvalue >= 0.5


def test_single_run_equals_histogram_of_that_graph():
    res = monte_carlo_weight_distribution(spec("uniform:1,4"), spec("uniform:1,3"), 12, 15, 1, 3,
                                          pair_weighting="uniform")
    seed = np.random.SeedSequence(3).spawn(1)[0]
    g = generate_bipartite(spec("uniform:1,4"), spec("uniform:1,3"), 12, 15, np.random.default_rng(seed)).graph
    # brute-force histogram over all 66 pairs
    b = g.adjacency.toarray()
    weights = [int(b[u] @ b[w]) for u in range(12) for w in range(u + 1, 12)]
    hist = np.bincount(weights) / len(weights)
    np.testing.assert_allclose(res.average_weight_pmf[: len(hist)], hist, atol=1e-15)
    assert res.average_weight_pmf[len(hist):].sum() == 0


def test_degree_weighted_histogram_by_hand():
    from bipbackbone import BipartiteGraph
    g = BipartiteGraph.from_edges([0, 1, 1, 2], [0, 0, 1, 1])
    # pair weights j*j': (0,1)=2 w=1, (0,2)=1 w=0, (1,2)=2 w=1
    np.testing.assert_allclose(pair_weight_histogram(g, "degree"), [1 / 5, 4 / 5])
    np.testing.assert_allclose(pair_weight_histogram(g, "uniform"), [1 / 3, 2 / 3])


def test_monte_carlo_result_shape_and_determinism():
    a = monte_carlo_weight_distribution(spec("delta:3"), spec("exp:1"), 60, 120, 5, 8)
    b = monte_carlo_weight_distribution(spec("delta:3"), spec("exp:1"), 60, 120, 5, 8)
    assert a.ks_statistic == b.ks_statistic and a.ks_pvalue == b.ks_pvalue
    assert np.array_equal(a.average_weight_pmf, b.average_weight_pmf)
    assert abs(a.average_weight_pmf.sum() - 1) < 1e-6
    assert abs(a.approx_pmf.sum() - 1) < 1e-6
    assert 0 <= a.ks_statistic <= 1
    assert a.to_csv().startswith("omega,empirical_p,analytic_p\n")


@pytest.mark.parametrize("pdist,sdist", [("delta:3", "exp:1"), ("exp:0.5", "exp:1"),
                                         ("normal:4,1", "uniform:1,3")])
def test_empirical_mean_converges_to_global_mean(pdist, sdist):
    res = monte_carlo_weight_distribution(spec(pdist), spec(sdist), 200, 400, 60, 17)
    emp = res.run_empirical_mus
    se = emp.std(ddof=1) / np.sqrt(len(emp))
    assert abs(emp.mean() - res.run_mus.mean()) <= 3 * se
