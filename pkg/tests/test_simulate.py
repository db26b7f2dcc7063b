import numpy as np
import pytest
from scipy import stats

from dcovdag.errors import MaskError
from dcovdag.graphs import MixedGraph
from dcovdag.simulate import (
    NoiseScheme,
    NonlinearCoefficients,
    WeightedAdjacency,
    apply_latent_mask,
    draw_nonlinear_coefficients,
    random_dag_adjacency,
    sample_linear_sem,
    sample_nonlinear_sem,
    solve_linear_sem,
    solve_nonlinear_sem,
    truth_graph,
)


def zero_adjacency(p: int) -> WeightedAdjacency:
    return WeightedAdjacency(p=p, weights=np.zeros((p, p)), sparsity=0.5)


class TestRandomDag:
    def test_expected_degree(self):
        # p=9, s=0.175 targets expected degree 1.4 per vertex
        total = 0.0
        for seed in range(1000):
            adj = random_dag_adjacency(9, 0.175, seed)
            total += 2 * np.count_nonzero(adj.weights) / 9
        assert abs(total / 1000 - 1.4) < 0.1

    def test_empty_graph_rate(self):
        empty = sum(
            np.count_nonzero(random_dag_adjacency(3, 0.5, seed).weights) == 0
            for seed in range(2000)
        )
        # empty probability (1-s)^3 = 1/8; 4 sigma Monte-Carlo band
        se = np.sqrt(0.125 * 0.875 / 2000)
        assert abs(empty / 2000 - 0.125) < 4 * se

    def test_weights_in_range(self):
        values = []
        seed = 0
        while len(values) < 100_000:
            w = random_dag_adjacency(20, 0.6, seed).weights
            values.extend(w[w != 0].tolist())
            seed += 1
        values = np.asarray(values[:100_000])
        assert values.min() >= 0.1 and values.max() < 1.0

    def test_strictly_lower_triangular(self):
        adj = random_dag_adjacency(8, 0.4, 3)
        assert np.array_equal(np.triu(adj.weights), np.zeros((8, 8)))

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            random_dag_adjacency(1, 0.5, 0)
        with pytest.raises(ValueError):
            random_dag_adjacency(5, 0.0, 0)

    def test_determinism(self):
        a = random_dag_adjacency(10, 0.3, 42)
        b = random_dag_adjacency(10, 0.3, 42)
        assert np.array_equal(a.weights, b.weights)

    def test_truth_graph_edges(self):
        adj = random_dag_adjacency(8, 0.4, 5)
        g = truth_graph(adj)
        for i in range(8):
            for j in range(8):
                assert g.is_directed_edge(j, i) == (adj.weights[i, j] != 0)
        g.require_dag()


class TestLinearSem:
    def test_zero_weights_reproduce_noise(self):
        eps = np.random.default_rng(0).standard_normal((50, 4))
        x = solve_linear_sem(np.zeros((4, 4)), eps)
        assert np.array_equal(x, eps)

    def test_single_substitution(self):
        weights = np.array([[0.0, 0.0], [0.5, 0.0]])
        x = solve_linear_sem(weights, np.array([[1.0, 1.0]]))
        assert np.array_equal(x, np.array([[1.0, 1.5]]))

    def test_sample_covariance_matches_analytic(self):
        for seed in (0, 1):
            adj = random_dag_adjacency(5, 0.4, seed)
            data = sample_linear_sem(adj, NoiseScheme.NORMAL, 100_000, seed + 100)
            inv = np.linalg.inv(np.eye(5) - adj.weights)
            target = inv @ inv.T
            emp = np.cov(data.values, rowvar=False)
            rel = np.linalg.norm(emp - target) / np.linalg.norm(target)
            assert rel < 0.02

    def test_determinism(self):
        adj = random_dag_adjacency(6, 0.3, 7)
        a = sample_linear_sem(adj, NoiseScheme.NORMAL_CAUCHY_MIXTURE, 100, 11)
        b = sample_linear_sem(adj, NoiseScheme.NORMAL_CAUCHY_MIXTURE, 100, 11)
        assert np.array_equal(a.values, b.values)

    def test_sample_size_validation(self):
        with pytest.raises(ValueError):
            sample_linear_sem(zero_adjacency(3), NoiseScheme.NORMAL, 0, 0)


class TestNoiseSchemes:
    def test_copula_marginal_is_f11(self):
        data = sample_linear_sem(zero_adjacency(1), NoiseScheme.COPULA_F11, 100_000, 3)
        draws = data.values[:, 0]
        ks = stats.kstest(draws, stats.f(1, 1).cdf).statistic
        assert ks < 0.01
        # closed-form CDF agrees with the scipy one
        grid = np.array([0.1, 1.0, 5.0, 42.0])
        closed = 2.0 / np.pi * np.arctan(np.sqrt(grid))
        assert np.allclose(closed, stats.f(1, 1).cdf(grid), atol=1e-12)

    def test_mixture_components(self):
        # replay the generator's draw order to recover the mixture indicator
        n = 100_000
        rng = np.random.default_rng(9)
        pick_normal = rng.random((n, 1)) < 0.5
        data = sample_linear_sem(zero_adjacency(1), NoiseScheme.NORMAL_CAUCHY_MIXTURE, n, 9)
        draws = data.values[:, 0]
        normal_part = draws[pick_normal[:, 0]]
        cauchy_part = draws[~pick_normal[:, 0]]
        assert abs(pick_normal.mean() - 0.5) < 0.01
        assert abs(normal_part.mean()) < 0.02
        assert abs(normal_part.std() - 1.0) < 0.02
        # standard Cauchy: P(|X| > 1) = 0.5, P(|X| > 10) ~ 0.0635
        assert abs((np.abs(cauchy_part) > 1.0).mean() - 0.5) < 0.02
        assert abs((np.abs(cauchy_part) > 10.0).mean() - 0.0635) < 0.01

    def test_mixture_keeps_heavy_tails(self):
        data = sample_linear_sem(zero_adjacency(1), NoiseScheme.NORMAL_CAUCHY_MIXTURE, 100_000, 13)
        assert np.abs(data.values).max() > 50  # unclamped Cauchy tail


class TestNonlinearSem:
    def test_zero_coefficients_reproduce_noise(self):
        eps = np.random.default_rng(1).standard_normal((20, 3))
        coef = NonlinearCoefficients(np.zeros((3, 3)), np.zeros((3, 3)))
        assert np.array_equal(solve_nonlinear_sem(coef, eps), eps)

    def test_linear_plus_square(self):
        coef = NonlinearCoefficients(
            linear=np.array([[0.0, 0.0], [1.0, 0.0]]),
            quadratic=np.array([[0.0, 0.0], [1.0, 0.0]]),
        )
        x = solve_nonlinear_sem(coef, np.array([[2.0, 0.0]]))
        assert np.array_equal(x, np.array([[2.0, 6.0]]))  # 2 + 4

    def test_coefficients_on_support_only(self):
        adj = random_dag_adjacency(7, 0.4, 21)
        coef = draw_nonlinear_coefficients(adj, 22)
        support = adj.weights != 0
        assert np.all(coef.linear[~support] == 0)
        assert np.all(coef.quadratic[~support] == 0)
        assert np.all(coef.linear[support] != 0)

    def test_child_tracks_squared_parent(self):
        adj = WeightedAdjacency(p=2, weights=np.array([[0.0, 0.0], [0.7, 0.0]]), sparsity=0.5)
        coef = NonlinearCoefficients(
            linear=np.zeros((2, 2)),
            quadratic=np.array([[0.0, 0.0], [0.8, 0.0]]),
        )
        data = sample_nonlinear_sem(adj, coef, 1000, 5)
        x, y = data.values[:, 0], data.values[:, 1]
        corr = np.corrcoef(x**2, y)[0, 1]
        assert corr > 0.3


class TestLatentMask:
    def test_two_eligible_drops_one(self):
        # 0 -> 2 <- 1: vertices 0 and 1 are parentless with a child
        truth = MixedGraph.from_directed_edges(3, [(0, 2), (1, 2)])
        data = sample_linear_sem(zero_adjacency(3), NoiseScheme.NORMAL, 10, 0)
        masked, mask = apply_latent_mask(truth, data, 1)
        assert len(mask.latent) == 1
        assert masked.p == 2
        assert masked.names == tuple(data.names[v] for v in mask.observed)

    def test_no_eligible_raises(self):
        truth = MixedGraph(3)  # no edges: no vertex has a child
        data = sample_linear_sem(zero_adjacency(3), NoiseScheme.NORMAL, 10, 0)
        with pytest.raises(MaskError):
            apply_latent_mask(truth, data, 0)

    def test_column_counts(self):
        for seed in range(100):
            adj = random_dag_adjacency(8, 0.3, seed)
            truth = truth_graph(adj)
            eligible = [v for v in range(8) if not truth.parents(v) and truth.children(v)]
            data = sample_linear_sem(adj, NoiseScheme.NORMAL, 5, seed)
            if not eligible:
                with pytest.raises(MaskError):
                    apply_latent_mask(truth, data, seed)
                continue
            masked, mask = apply_latent_mask(truth, data, seed)
            assert masked.p == 8 - len(mask.latent)
            assert len(mask.latent) == len(eligible) // 2
            assert mask.latent <= set(eligible)
            assert np.array_equal(masked.values, data.values[:, mask.observed])

    def test_determinism(self):
        truth = MixedGraph.from_directed_edges(4, [(0, 2), (1, 2), (2, 3)])
        data = sample_linear_sem(zero_adjacency(4), NoiseScheme.NORMAL, 5, 0)
        m1 = apply_latent_mask(truth, data, 7)[1]
        m2 = apply_latent_mask(truth, data, 7)[1]
        assert m1 == m2
