import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from treedim.estimators import entropy_estimate, level_measure, theta_hat
from treedim.growth import SeedSpec, complete_tree, grow_continuous, tree_from_parents
from treedim.leafwalk import (
    InsufficientGrowthError,
    ergodic_entropy_estimate,
    local_dimension_estimate,
    path_measure,
    sample_leaf_path,
    sample_leaf_paths,
    size_biased_choice,
    theta_chain_samples,
)
from treedim.oracle import compare_counts

from conftest import GOLDEN_H, GOLDEN_LAMBDA, chain_tree, cherry_tree, mean_se


@pytest.fixture(scope="module")
def tree_1e5():
    return grow_continuous((1, 1), max_size=10**5, seed=SeedSpec(101, 0))


@pytest.mark.parametrize("rule", ["level", "subtree"])
def test_chain_path_is_deterministic(rule):
    p = sample_leaf_path(chain_tree(length=2), 2, seed=3, rule=rule)
    assert p.vertices.tolist() == [0, 1, 2]
    assert p.q.tolist() == [1.0, 1.0]


def test_cherry_endpoint_is_fair():
    b = sample_leaf_paths(cherry_tree(), 1, 20000, seed=1)
    frac = np.mean(b.vertices[:, 1] == 1)
    assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / 20000)
    assert np.all(b.q == 0.5)


@pytest.mark.parametrize("rule", ["level", "subtree"])
def test_endpoint_law_chi2(tree_1e5, rule):
    ids, prob = path_measure(tree_1e5, 5, rule)
    b = sample_leaf_paths(tree_1e5, 5, 10_000, seed=SeedSpec(102, 0), rule=rule)
    counts = Counter(b.vertices[:, -1].tolist())
    dist = {int(v): p for v, p in zip(ids, prob) if p > 0}
    assert compare_counts(dist, counts).p_value > 1e-3


def test_level_rule_endpoint_law_is_level_measure(tree_1e5):
    ids, prob = path_measure(tree_1e5, 5)
    mu = level_measure(tree_1e5, 5)
    assert np.array_equal(ids, mu.vertices)
    assert np.allclose(prob, mu.weights, rtol=0, atol=1e-12)


def test_level_rule_telescopes_to_level_weight(tree_1e5):
    mu = level_measure(tree_1e5, 6)
    weight = dict(zip(mu.vertices.tolist(), mu.weights.tolist()))
    b = sample_leaf_paths(tree_1e5, 6, 500, seed=4)
    for k in range(len(b)):
        p = b[k]
        assert abs(p.weight - weight[p.endpoint]) <= 1e-10
        for a, c in zip(p.vertices[:-1], p.vertices[1:]):
            assert tree_1e5.parent[c] == a


def test_subtree_rule_telescoping_integer_identity(tree_1e5):
    sz = tree_1e5.subtree_sizes
    b = sample_leaf_paths(tree_1e5, 5, 500, seed=5, rule="subtree")
    for k in range(len(b)):
        v = b.vertices[k]
        expected = [sz[v[j + 1]] / (sz[v[j]] - 1) for j in range(5)]
        assert np.array_equal(b.q[k], expected)
        num = math.prod(int(sz[v[j]]) for j in range(1, 6))
        den = math.prod(int(sz[v[j]]) - 1 for j in range(5))
        assert b[k].weight == pytest.approx(num / den, rel=1e-12)


def test_subtree_rule_dead_end_raises():
    # root -> {1 (leaf), 2 -> 21}; depth-2 path through vertex 1 has nowhere to go
    G = tree_from_parents((1, 1), [-1, 0, 0, 2], [0, 1, 2, 1], [0, 1, 2, 3], clock=3, continuous=True)
    with pytest.raises(InsufficientGrowthError):
        sample_leaf_paths(G, 2, 200, seed=1, rule="subtree")
    # the level rule only follows branches that reach depth 2
    b = sample_leaf_paths(G, 2, 200, seed=1)
    assert np.all(b.vertices[:, -1] == 3)


def test_ergodic_uniform_binary_exact():
    G = complete_tree((1, 1), 7)
    b = sample_leaf_paths(G, 7, 50, seed=2)
    assert np.allclose(b.neg_log_weight_over_n(), math.log(2), rtol=0, atol=1e-14)
    assert ergodic_entropy_estimate(G, 7, 10, seed=3) == pytest.approx(math.log(2), abs=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ergodic_agrees_with_ensemble(seed):
    G = grow_continuous((1, 1), max_size=50_000, seed=SeedSpec(111, seed))
    b = sample_leaf_paths(G, 6, 10_000, seed=SeedSpec(112, seed))
    m, se = mean_se(b.neg_log_weight_over_n())
    assert abs(m - entropy_estimate(G, 6).h_hat) < 3 * se


def test_ergodic_benchmark(benchmark_stats):
    m, _ = mean_se([s["ergodic"] for s in benchmark_stats])
    assert abs(m - 0.527864) < 0.05


def test_local_dimension_uniform():
    G = complete_tree((1, 1), 5)
    p = sample_leaf_path(G, 5, seed=1)
    assert local_dimension_estimate(G, p, 0.5) == pytest.approx(1.0, abs=1e-14)
    assert local_dimension_estimate(G, p, 0.25) == pytest.approx(0.5, abs=1e-14)


def test_local_dimension_validation():
    G = complete_tree((1, 1), 2)
    p = sample_leaf_path(G, 2, seed=1)
    for a in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            local_dimension_estimate(G, p, a)
    with pytest.raises(ValueError):
        local_dimension_estimate(G, sample_leaf_path(G, 0, seed=1), 0.5)


def test_local_dimension_benchmark(benchmark_stats):
    vals = [np.mean(s["path_log_weights"] / (10 * -1.0)) for s in benchmark_stats]
    assert abs(np.mean(vals) - GOLDEN_H) < 0.05


def test_theta_chain_basic(tree_1e5):
    p = sample_leaf_path(tree_1e5, 8, seed=9)
    X = theta_chain_samples(tree_1e5, GOLDEN_LAMBDA, p)
    assert X[0] == pytest.approx(theta_hat(tree_1e5, GOLDEN_LAMBDA, 0).value)
    assert len(X) == 9 and np.all(X > 0)


def test_theta_chain_marginals_stationary(benchmark_stats):
    # one value per replica and group, from two different paths, so samples are independent
    early = [s["chain"][0, 6 + r % 5] for r, s in enumerate(benchmark_stats)]
    late = [s["chain"][1, 11 + r % 5] for r, s in enumerate(benchmark_stats)]
    assert stats.ks_2samp(early, late).pvalue > 0.01


def test_size_biased_singleton():
    assert all(size_biased_choice([5.0], [1.0], seed=s) == 0 for s in range(20))


def test_size_biased_two_values():
    R = 100_000
    draws = size_biased_choice([1.0, 3.0], [0.5, 0.5], seed=7, size=R)
    p = 0.5 * 3 / (0.5 * 1 + 0.5 * 3)
    assert abs(np.mean(draws == 1) - p) < 3 * math.sqrt(p * (1 - p) / R)


def test_size_biased_equal_values_follow_extra_weights():
    R = 100_000
    p = np.array([0.1, 0.2, 0.3, 0.4])
    draws = size_biased_choice([2.0] * 4, p, seed=8, size=R)
    obs = np.bincount(draws, minlength=4)
    assert stats.chisquare(obs, p * R).pvalue > 1e-3


def test_size_biased_general_chi2():
    R = 100_000
    z = np.array([1.0, 2.0, 0.5, 7.0, 3.0])
    p = np.array([0.3, 0.1, 0.4, 0.05, 0.15])
    draws = size_biased_choice(z, p, seed=9, size=R)
    target = p * z / (p * z).sum()
    assert stats.chisquare(np.bincount(draws, minlength=5), target * R).pvalue > 1e-3


@pytest.mark.parametrize(
    "z, p",
    [([1.0, 2.0], [0.0, 0.0]), ([0.0, 0.0], [0.5, 0.5]), ([-1.0, 2.0], [0.5, 0.5]), ([1.0, 2.0], [0.7, 0.7]), ([1.0], [0.5, 0.5])],
)
def test_size_biased_errors(z, p):
    with pytest.raises(ValueError):
        size_biased_choice(z, p, seed=1)


def test_size_biased_zero_product_never_chosen():
    draws = size_biased_choice([1.0, 5.0, 2.0], [0.5, 0.0, 0.5], seed=3, size=10_000)
    assert not np.any(draws == 1)
