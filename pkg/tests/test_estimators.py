import numpy as np
import pytest

from ksivi.estimators import grad_ustat, grad_vanilla, ksd2_estimate, value_and_grad
from ksivi.family import SIVParams, reparameterize, siv_init, siv_sample_batch
from ksivi.kernels import KernelSpec, kernel_eval
from ksivi.nets import NetArch, NetParams
from ksivi.targets import Banana, diagonal_gaussian

from helpers import central_difference_gradient, gauss_hermite_expectation_2d, relative_error

RBF = KernelSpec("rbf", bandwidth=1.0)


def frozen_value_fn(arch, target, kernel, z_blocks, xi_blocks, kind, beta_temp=1.0, reg_weight=0.0):
    """Objective as a function of the flat parameter under frozen (z, xi)."""

    def value(flat):
        p = SIVParams.from_flat(arch, flat)
        batches = [reparameterize(p, z, xi) for z, xi in zip(z_blocks, xi_blocks)]
        arg = tuple(batches) if kind == "vanilla" else batches[0]
        return ksd2_estimate(p, target, kernel, arg, kind, beta_temp, reg_weight)

    return value


def match_params(mean, rho, d_z=3):
    arch = NetArch((d_z, 4, mean.size))
    net = NetParams.zeros(arch)
    net.biases[-1][:] = mean
    return SIVParams(net, rho)


def draw_blocks(params, n, count, seed):
    rng = np.random.default_rng(seed)
    zs, xis = [], []
    for _ in range(count):
        b = siv_sample_batch(params, n, rng)
        zs.append(b.z)
        xis.append(b.xi)
    return zs, xis


class TestGradientExactness:
    @pytest.mark.parametrize("kind", ["vanilla", "ustat"])
    @pytest.mark.parametrize("kernel", [RBF, KernelSpec("imq"), KernelSpec("riesz")], ids=lambda k: k.family)
    def test_matches_finite_differences(self, kind, kernel):
        arch = NetArch((3, 8, 2))
        params = siv_init(arch, seed=0, rho_init=-0.5)
        target = Banana()
        n_blocks = 2 if kind == "vanilla" else 1
        zs, xis = draw_blocks(params, 6, n_blocks, seed=1)
        batches = [reparameterize(params, z, xi) for z, xi in zip(zs, xis)]

        if kind == "vanilla":
            analytic = grad_vanilla(params, target, kernel, batches[0], batches[1])
        else:
            analytic = grad_ustat(params, target, kernel, batches[0])

        value = frozen_value_fn(arch, target, kernel, zs, xis, kind)
        fd = central_difference_gradient(value, params.to_flat(), step=1e-4)
        floor = 1e-6 * max(1.0, np.abs(analytic).max())
        assert relative_error(analytic, fd, floor=floor).max() < 1e-4

    @pytest.mark.parametrize("beta", [0.5, 1.0])
    def test_tempered_gradient_matches_finite_differences(self, beta):
        arch = NetArch((3, 8, 2))
        params = siv_init(arch, seed=2, rho_init=-0.2)
        target = Banana()
        zs, xis = draw_blocks(params, 5, 2, seed=3)
        batches = [reparameterize(params, z, xi) for z, xi in zip(zs, xis)]
        analytic = grad_vanilla(params, target, RBF, batches[0], batches[1], beta_temp=beta)
        value = frozen_value_fn(arch, target, RBF, zs, xis, "vanilla", beta_temp=beta)
        fd = central_difference_gradient(value, params.to_flat(), step=1e-4)
        floor = 1e-6 * max(1.0, np.abs(analytic).max())
        assert relative_error(analytic, fd, floor=floor).max() < 1e-4

    @pytest.mark.parametrize("kind", ["vanilla", "ustat"])
    def test_regularized_gradient_matches_finite_differences(self, kind):
        arch = NetArch((3, 6, 2))
        params = siv_init(arch, seed=4, rho_init=0.1)
        target = Banana()
        n_blocks = 2 if kind == "vanilla" else 1
        zs, xis = draw_blocks(params, 5, n_blocks, seed=5)
        batches = [reparameterize(params, z, xi) for z, xi in zip(zs, xis)]
        lam = 0.3
        if kind == "vanilla":
            analytic = grad_vanilla(params, target, RBF, batches[0], batches[1], reg_weight=lam)
        else:
            analytic = grad_ustat(params, target, RBF, batches[0], reg_weight=lam)
        value = frozen_value_fn(arch, target, RBF, zs, xis, kind, reg_weight=lam)
        fd = central_difference_gradient(value, params.to_flat(), step=1e-4)
        floor = 1e-6 * max(1.0, np.abs(analytic).max())
        assert relative_error(analytic, fd, floor=floor).max() < 1e-4


class TestStationarity:
    def test_gaussian_match_value_and_gradient_vanish(self):
        mean = np.array([0.8, -0.3])
        rho = np.array([-0.4, 0.2])
        params = match_params(mean, rho)
        target = diagonal_gaussian(mean, np.exp(2.0 * rho))
        rng = np.random.default_rng(6)
        b1 = siv_sample_batch(params, 64, rng)
        b2 = siv_sample_batch(params, 64, rng)
        value, grad = value_and_grad(params, target, RBF, (b1, b2), "vanilla")
        assert abs(value) <= 1e-8
        n_net = params.net.n_params
        assert np.linalg.norm(grad[:n_net]) <= 1e-7
        assert np.linalg.norm(grad) <= 1e-7

    def test_ustat_also_stationary(self):
        mean = np.zeros(2)
        rho = np.zeros(2)
        params = match_params(mean, rho)
        target = diagonal_gaussian(mean, np.ones(2))
        batch = siv_sample_batch(params, 64, np.random.default_rng(7))
        value, grad = value_and_grad(params, target, RBF, batch, "ustat")
        assert abs(value) <= 1e-8
        assert np.linalg.norm(grad) <= 1e-7


class TestValueEstimates:
    def test_ustat_two_samples_single_term(self):
        params = siv_init(NetArch((3, 6, 2)), seed=8, rho_init=-0.3)
        target = Banana()
        batch = siv_sample_batch(params, 2, np.random.default_rng(8))
        from ksivi.family import f_vectors

        f = f_vectors(batch, params, target)
        expect = kernel_eval(RBF, batch.x[0], batch.x[1]) * float(f[0] @ f[1])
        assert np.isclose(ksd2_estimate(params, target, RBF, batch, "ustat"), expect, rtol=1e-12)

    def test_vanilla_matches_direct_double_sum(self):
        params = siv_init(NetArch((3, 6, 2)), seed=9, rho_init=0.0)
        target = Banana()
        rng = np.random.default_rng(9)
        b1 = siv_sample_batch(params, 4, rng)
        b2 = siv_sample_batch(params, 4, rng)
        from ksivi.family import f_vectors

        f1 = f_vectors(b1, params, target)
        f2 = f_vectors(b2, params, target)
        direct = np.mean(
            [
                kernel_eval(RBF, b1.x[i], b2.x[j]) * float(f1[i] @ f2[j])
                for i in range(4)
                for j in range(4)
            ]
        )
        assert np.isclose(ksd2_estimate(params, target, RBF, (b1, b2), "vanilla"), direct, rtol=1e-12)

    def test_quadrature_oracle_1d(self):
        # degenerate family: constant mean 0.5, fixed scale 0.8, standard
        # normal target; the population value is a 2-D Gaussian integral
        mean = np.array([0.5])
        rho = np.array([np.log(0.8)])
        params = match_params(mean, rho, d_z=2)
        target = diagonal_gaussian(np.zeros(1), np.ones(1))

        def integrand(xi, xi_prime):
            x = 0.5 + 0.8 * xi
            xp = 0.5 + 0.8 * xi_prime
            f = -x + xi / 0.8
            fp = -xp + xi_prime / 0.8
            return np.exp(-((x - xp) ** 2) / 2.0) * f * fp

        oracle = gauss_hermite_expectation_2d(integrand, n_nodes=201)

        n = 4000
        batch = siv_sample_batch(params, n, np.random.default_rng(10))
        estimate = ksd2_estimate(params, target, RBF, batch, "ustat")

        # asymptotic U-statistic standard error from the projection variance
        from ksivi.family import f_vectors
        from ksivi.kernels import eval_matrix

        f = f_vectors(batch, params, target)
        h = eval_matrix(RBF, batch.x, batch.x) * (f @ f.T)
        np.fill_diagonal(h, 0.0)
        proj = h.sum(axis=1) / (n - 1)
        se = np.sqrt(4.0 * proj.var() / n)
        assert abs(estimate - oracle) < 3.0 * se

    def test_estimators_share_their_mean(self):
        params = siv_init(NetArch((3, 6, 2)), seed=11, rho_init=-0.3)
        target = Banana()
        n, n_seeds = 16, 300
        vals_v, vals_u = [], []
        rng = np.random.default_rng(11)
        for _ in range(n_seeds):
            b1 = siv_sample_batch(params, n, rng)
            b2 = siv_sample_batch(params, n, rng)
            vals_v.append(ksd2_estimate(params, target, RBF, (b1, b2), "vanilla"))
            vals_u.append(ksd2_estimate(params, target, RBF, b1, "ustat"))
        vals_v = np.asarray(vals_v)
        vals_u = np.asarray(vals_u)
        se = np.sqrt(vals_v.var() / n_seeds + vals_u.var() / n_seeds)
        assert abs(vals_v.mean() - vals_u.mean()) < 4.0 * se

    def test_mean_nonnegative(self):
        params = siv_init(NetArch((3, 6, 2)), seed=12, rho_init=0.0)
        target = Banana()
        rng = np.random.default_rng(12)
        vals = []
        for _ in range(500):
            batch = siv_sample_batch(params, 8, rng)
            vals.append(ksd2_estimate(params, target, RBF, batch, "ustat"))
        vals = np.asarray(vals)
        assert vals.mean() >= -3.0 * vals.std() / np.sqrt(vals.size)

    def test_variance_shrinks_with_batch_size(self):
        params = siv_init(NetArch((3, 6, 2)), seed=13, rho_init=-0.2)
        target = Banana()
        rng = np.random.default_rng(13)

        def variance(n, n_seeds=400):
            vals = [
                ksd2_estimate(params, target, RBF, siv_sample_batch(params, n, rng), "ustat")
                for _ in range(n_seeds)
            ]
            return np.var(vals)

        ratio = variance(16) / variance(64)
        assert 2.5 <= ratio <= 6.0


class TestGradientAgreement:
    def test_estimator_means_agree_componentwise(self):
        params = siv_init(NetArch((3, 5, 2)), seed=14, rho_init=-0.1)
        target = Banana()
        n, n_seeds = 12, 250
        rng = np.random.default_rng(14)
        grads_v = np.empty((n_seeds, params.n_params))
        grads_u = np.empty((n_seeds, params.n_params))
        for s in range(n_seeds):
            b1 = siv_sample_batch(params, n, rng)
            b2 = siv_sample_batch(params, n, rng)
            grads_v[s] = grad_vanilla(params, target, RBF, b1, b2)
            grads_u[s] = grad_ustat(params, target, RBF, b1)
        se = np.sqrt(grads_v.var(axis=0) / n_seeds + grads_u.var(axis=0) / n_seeds)
        gap = np.abs(grads_v.mean(axis=0) - grads_u.mean(axis=0))
        assert np.all(gap <= 4.0 * se + 1e-12)


class TestArgumentValidation:
    def test_vanilla_needs_two_batches(self):
        params = siv_init(NetArch((3, 4, 2)), seed=15)
        batch = siv_sample_batch(params, 4, np.random.default_rng(15))
        with pytest.raises(ValueError):
            ksd2_estimate(params, Banana(), RBF, batch, "vanilla")

    def test_ustat_needs_two_samples(self):
        params = siv_init(NetArch((3, 4, 2)), seed=16)
        batch = siv_sample_batch(params, 1, np.random.default_rng(16))
        with pytest.raises(ValueError):
            ksd2_estimate(params, Banana(), RBF, batch, "ustat")

    def test_unknown_kind(self):
        params = siv_init(NetArch((3, 4, 2)), seed=17)
        batch = siv_sample_batch(params, 4, np.random.default_rng(17))
        with pytest.raises(ValueError):
            ksd2_estimate(params, Banana(), RBF, batch, "bogus")
