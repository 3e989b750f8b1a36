import numpy as np
import pytest

from ksivi.kernels import KernelSpec
from ksivi.metrics import (
    DegenerateSamplesError,
    corr_pairs,
    kl_knn,
    mmd2_ustat,
    mmd2_vstat,
    sliced_wd,
    upper_triangle,
)

RBF = KernelSpec("rbf", bandwidth=1.0)


def gaussian_rbf_cross_term(m1, s1, m2, s2, h=1.0):
    """E k(x, y) for independent 1-D Gaussians under an RBF kernel."""
    var = h**2 + s1**2 + s2**2
    return h / np.sqrt(var) * np.exp(-((m1 - m2) ** 2) / (2.0 * var))


class TestMMD:
    def test_vstat_identical_sets_zero(self):
        X = np.random.default_rng(0).standard_normal((50, 3))
        assert mmd2_vstat(X, X, RBF) == 0.0

    def test_ustat_identical_sets_small_negative_bias(self):
        X = np.random.default_rng(1).standard_normal((200, 2))
        value = mmd2_ustat(X, X, RBF)
        assert value <= 0.0
        assert abs(value) < 0.1

    def test_two_point_masses_closed_form(self):
        a = np.array([[0.0, 0.0]])
        b = np.array([[2.0, 0.0]])
        # single points per set: V-statistic is 2 (1 - exp(-||a-b||^2 / 2))
        expect = 2.0 * (1.0 - np.exp(-2.0))
        assert np.isclose(mmd2_vstat(a, b, RBF), expect)

    def test_matches_population_value(self):
        # N(0,1) vs N(1,1): population value from the Gaussian closed form,
        # which the quadrature oracle in the acceptance suite reproduces
        n = 5000
        rng = np.random.default_rng(2)
        X = rng.standard_normal((n, 1))
        Y = rng.standard_normal((n, 1)) + 1.0
        population = (
            gaussian_rbf_cross_term(0, 1, 0, 1)
            + gaussian_rbf_cross_term(1, 1, 1, 1)
            - 2.0 * gaussian_rbf_cross_term(0, 1, 1, 1)
        )
        estimate = mmd2_ustat(X, Y, RBF)
        # rough standard error via independent replicates at smaller n
        reps = [
            mmd2_ustat(
                rng.standard_normal((1000, 1)),
                rng.standard_normal((1000, 1)) + 1.0,
                RBF,
            )
            for _ in range(10)
        ]
        se_n = np.std(reps) * np.sqrt(1000.0 / n)
        assert abs(estimate - population) < 3.0 * se_n

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((40, 2))
        Y = rng.standard_normal((30, 2)) + 0.5
        assert np.isclose(mmd2_ustat(X, Y, RBF), mmd2_ustat(Y, X, RBF), rtol=1e-12)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            mmd2_ustat(np.zeros((1, 2)), np.zeros((5, 2)), RBF)


class TestSlicedWD:
    def test_identical_sets_zero(self):
        X = np.random.default_rng(4).standard_normal((100, 3))
        assert sliced_wd(X, X) == 0.0

    def test_one_dimensional_shift(self):
        X = np.array([[0.0], [1.0]])
        Y = np.array([[1.0], [2.0]])
        assert np.isclose(sliced_wd(X, Y, n_proj=16, seed=0), 1.0)

    def test_matches_dense_projection_oracle(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((10_000, 2))
        Y = rng.standard_normal((10_000, 2)) + np.array([1.0, 0.0])
        dense = sliced_wd(X, Y, n_proj=10_000, seed=1)
        standard = sliced_wd(X, Y, n_proj=128, seed=2)
        assert abs(standard - dense) < 0.1 * dense

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((50, 2))
        Y = rng.standard_normal((50, 2))
        assert sliced_wd(X, Y, seed=3) == sliced_wd(X, Y, seed=3)

    def test_unequal_sizes_subsampled(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((200, 2))
        Y = rng.standard_normal((150, 2))
        value = sliced_wd(X, Y, seed=4)
        assert np.isfinite(value) and value >= 0.0

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((80, 2))
        Y = rng.standard_normal((80, 2)) + 0.3
        assert np.isclose(sliced_wd(X, Y, seed=5), sliced_wd(Y, X, seed=5), rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sliced_wd(np.zeros((10, 2)), np.zeros((10, 3)))


class TestKLKNN:
    def test_same_distribution_near_zero(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((10_000, 2))
        Y = rng.standard_normal((10_000, 2))
        assert abs(kl_knn(X, Y)) < 0.05

    def test_shifted_gaussian_analytic_value(self):
        # KL(N(0,1) || N(1,1)) = 0.5 exactly
        rng = np.random.default_rng(10)
        X = rng.standard_normal((10_000, 1))
        Y = rng.standard_normal((10_000, 1)) + 1.0
        assert abs(kl_knn(X, Y) - 0.5) < 0.1

    def test_invariant_under_shared_linear_map(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((5000, 2))
        Y = rng.standard_normal((5000, 2)) + np.array([0.5, 0.0])
        A = np.array([[2.0, 0.3], [-0.4, 1.5]])
        before = kl_knn(X, Y)
        after = kl_knn(X @ A.T, Y @ A.T)
        assert abs(before - after) < 0.1

    def test_asymmetric_on_skewed_inputs(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((4000, 1)) * 0.3
        Y = rng.standard_normal((4000, 1)) * 2.0
        assert abs(kl_knn(X, Y) - kl_knn(Y, X)) > 0.3

    def test_duplicate_degeneracy_reported(self):
        X = np.zeros((100, 2))
        Y = np.random.default_rng(13).standard_normal((100, 2))
        with pytest.raises(DegenerateSamplesError):
            kl_knn(X, Y)

    def test_neighbor_count_validation(self):
        X = np.random.default_rng(14).standard_normal((5, 2))
        with pytest.raises(ValueError):
            kl_knn(X, X, k=5)


class TestCorrPairs:
    def test_duplicated_coordinate(self):
        rng = np.random.default_rng(15)
        base = rng.standard_normal(100)
        X = np.stack([base, base, rng.standard_normal(100)], axis=1)
        corr = corr_pairs(X)
        assert np.isclose(corr[0, 1], 1.0)

    def test_negated_coordinate(self):
        rng = np.random.default_rng(16)
        base = rng.standard_normal(100)
        X = np.stack([base, -base], axis=1)
        assert np.isclose(corr_pairs(X)[0, 1], -1.0)

    def test_known_correlation(self):
        rng = np.random.default_rng(17)
        n = 10_000
        u = rng.standard_normal(n)
        v = 0.9 * u + np.sqrt(1.0 - 0.81) * rng.standard_normal(n)
        corr = corr_pairs(np.stack([u, v], axis=1))
        assert abs(corr[0, 1] - 0.9) < 0.02

    def test_zero_variance_rejected(self):
        X = np.ones((10, 2))
        X[:, 1] = np.arange(10)
        with pytest.raises(ValueError, match="variance"):
            corr_pairs(X)

    def test_values_bounded(self):
        X = np.random.default_rng(18).standard_normal((50, 4))
        corr = corr_pairs(X)
        assert np.all(corr <= 1.0) and np.all(corr >= -1.0)

    def test_upper_triangle_order(self):
        mat = np.arange(9.0).reshape(3, 3)
        assert np.array_equal(upper_triangle(mat), [1.0, 2.0, 5.0])


class TestPermutationInvariance:
    def test_all_metrics(self):
        rng = np.random.default_rng(19)
        X = rng.standard_normal((60, 2))
        Y = rng.standard_normal((60, 2)) + 0.2
        perm = rng.permutation(60)
        assert np.isclose(mmd2_ustat(X[perm], Y, RBF), mmd2_ustat(X, Y, RBF), rtol=1e-10)
        assert np.isclose(sliced_wd(X[perm], Y, seed=6), sliced_wd(X, Y, seed=6), rtol=1e-10)
        assert np.isclose(kl_knn(X[perm], Y), kl_knn(X, Y), rtol=1e-10)
        assert np.allclose(corr_pairs(X[perm]), corr_pairs(X), rtol=1e-10)
