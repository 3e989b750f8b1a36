import numpy as np
import pytest
from scipy import stats

from ksivi.samplers import (
    SamplerConfig,
    SamplerDivergence,
    langevin_step,
    mala_run,
    sgld_run,
)
from ksivi.targets import Banana, TargetModel, diagonal_gaussian


def gaussian5():
    return diagonal_gaussian(np.zeros(5), np.ones(5))


class TestLangevinStep:
    def test_drift_only_exactness(self):
        target = Banana()
        rng = np.random.default_rng(0)
        x = rng.standard_normal((7, 2))
        stepped = langevin_step(x, target.score(x), 0.05, np.zeros_like(x))
        assert np.array_equal(stepped, x + 0.025 * target.score(x))

    def test_noise_scale(self):
        x = np.zeros((3, 2))
        noise = np.ones((3, 2))
        stepped = langevin_step(x, np.zeros_like(x), 0.04, noise)
        assert np.allclose(stepped, 0.2)


class TestSGLD:
    def test_stationary_variance(self):
        config = SamplerConfig(n_particles=400, n_steps=4000, step_size=0.01, seed=1)
        run = sgld_run(gaussian5(), config)
        variances = run.states.var(axis=0)
        assert np.all(variances > 0.9) and np.all(variances < 1.15)

    def test_bitwise_deterministic(self):
        config = SamplerConfig(n_particles=50, n_steps=200, step_size=0.01, seed=2)
        a = sgld_run(gaussian5(), config)
        b = sgld_run(gaussian5(), config)
        assert np.array_equal(a.states, b.states)

    def test_particle_seed_permutation_permutes_rows(self):
        seeds = (11, 22, 33, 44)
        base = SamplerConfig(n_particles=4, n_steps=100, step_size=0.01, particle_seeds=seeds)
        run = sgld_run(gaussian5(), base)
        perm = (2, 0, 3, 1)
        shuffled = SamplerConfig(
            n_particles=4,
            n_steps=100,
            step_size=0.01,
            particle_seeds=tuple(seeds[i] for i in perm),
        )
        run_perm = sgld_run(gaussian5(), shuffled)
        assert np.array_equal(run_perm.states, run.states[list(perm)])

    def test_history_collection(self):
        config = SamplerConfig(
            n_particles=10,
            n_steps=50,
            step_size=0.01,
            burn_in=20,
            thin=5,
            seed=3,
            collect_history=True,
        )
        run = sgld_run(gaussian5(), config)
        assert run.history.shape == (6, 10, 5)
        assert run.pooled_history.shape == (60, 5)

    def test_divergence_reported(self):
        class ExplodingTarget(TargetModel):
            dim = 1

            def _logp(self, X):
                return np.zeros(X.shape[0])

            def _score(self, X):
                with np.errstate(over="ignore"):
                    return X * 1e6

            def _hvp(self, X, V):
                return V

        config = SamplerConfig(n_particles=3, n_steps=400, step_size=1.0, seed=4)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(SamplerDivergence) as err:
                sgld_run(ExplodingTarget(), config)
        assert err.value.step >= 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(n_particles=0, n_steps=10, step_size=0.1)
        with pytest.raises(ValueError):
            SamplerConfig(n_particles=1, n_steps=10, step_size=0.1, burn_in=10)
        with pytest.raises(ValueError):
            SamplerConfig(n_particles=2, n_steps=10, step_size=0.1, particle_seeds=(1,))


class TestMALA:
    def test_acceptance_band_on_gaussian(self):
        config = SamplerConfig(n_particles=200, n_steps=2000, step_size=1.5, seed=5)
        run = mala_run(gaussian5(), config)
        assert 0.4 < run.acceptance_rate < 0.8

    def test_stationary_variance_tight(self):
        config = SamplerConfig(
            n_particles=500,
            n_steps=3000,
            step_size=1.5,
            burn_in=1000,
            thin=10,
            seed=6,
            collect_history=True,
        )
        run = mala_run(gaussian5(), config)
        variances = run.pooled_history.var(axis=0)
        assert np.all(variances > 0.97) and np.all(variances < 1.03)

    def test_detailed_balance_spot_check_1d(self):
        target = diagonal_gaussian(np.zeros(1), np.ones(1))
        config = SamplerConfig(
            n_particles=100,
            n_steps=1500,
            step_size=0.9,
            burn_in=500,
            thin=10,
            seed=7,
            collect_history=True,
        )
        run = mala_run(target, config)
        pooled = run.pooled_history[:, 0]
        assert pooled.size == 10_000
        _, pvalue = stats.kstest(pooled, "norm")
        assert pvalue > 0.01

    def test_self_proposal_always_accepted(self):
        # zero step noise makes the proposal essentially x itself only in the
        # drift-free case; instead verify directly that the log acceptance of
        # an identical proposal is zero
        from ksivi.samplers import _proposal_log_density

        target = gaussian5()
        x = np.random.default_rng(8).standard_normal((4, 5))
        score = target.score(x)
        log_alpha = (
            target.logp(x)
            - target.logp(x)
            + _proposal_log_density(x, x, score, 0.5)
            - _proposal_log_density(x, x, score, 0.5)
        )
        assert np.array_equal(log_alpha, np.zeros(4))

    def test_bitwise_deterministic(self):
        config = SamplerConfig(n_particles=30, n_steps=150, step_size=0.5, seed=9)
        a = mala_run(gaussian5(), config)
        b = mala_run(gaussian5(), config)
        assert np.array_equal(a.states, b.states)
        assert a.acceptance_rate == b.acceptance_rate
