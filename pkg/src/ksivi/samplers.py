"""Ground-truth posterior samplers: parallel overdamped Langevin chains.

Both samplers run many independent particles, vectorizing score evaluations
across the particle axis.  Each particle owns its own random stream (spawned
from the master seed, or given explicitly), so results are deterministic and
independent of execution order, and permuting the particle seed assignment
permutes output rows.  Noise is drawn in step chunks to amortize the
per-stream call overhead.

The unadjusted sampler iterates ``x + (eps/2) * score(x) + sqrt(eps) * noise``;
the adjusted variant proposes the same move and applies a Metropolis
correction, for which unnormalized log-densities suffice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOISE_CHUNK_BYTES = 64 * 2**20


class SamplerDivergence(RuntimeError):
    """Raised when a particle's state turns non-finite."""

    def __init__(self, particle: int, step: int):
        super().__init__(f"particle {particle} diverged at step {step}")
        self.particle = particle
        self.step = step


@dataclass(frozen=True)
class SamplerConfig:
    n_particles: int
    n_steps: int
    step_size: float
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    init: np.ndarray | None = None
    particle_seeds: tuple | None = None
    collect_history: bool = False

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if self.n_steps < 1:
            raise ValueError("need at least one step")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if not 0 <= self.burn_in < self.n_steps:
            raise ValueError("burn-in must lie in [0, n_steps)")
        if self.thin < 1:
            raise ValueError("thinning stride must be at least 1")
        if self.particle_seeds is not None and len(self.particle_seeds) != self.n_particles:
            raise ValueError("particle seed count must match particle count")


@dataclass
class SamplerRun:
    """Final particle states plus run diagnostics."""

    states: np.ndarray  # (n_particles, d)
    history: np.ndarray | None  # (n_kept, n_particles, d) when collected
    acceptance_rate: float | None  # adjusted sampler only
    n_steps: int

    @property
    def pooled_history(self) -> np.ndarray:
        if self.history is None:
            raise ValueError("run was executed without history collection")
        return self.history.reshape(-1, self.states.shape[1])


def langevin_step(x, score_value, step_size, noise):
    """Drift plus diffusion update; pure so the drift part is testable alone."""
    return x + 0.5 * step_size * score_value + np.sqrt(step_size) * noise


def _particle_rngs(config: SamplerConfig):
    if config.particle_seeds is not None:
        return [np.random.default_rng(np.random.SeedSequence(s)) for s in config.particle_seeds]
    seq = np.random.SeedSequence(config.seed)
    return [np.random.default_rng(child) for child in seq.spawn(config.n_particles)]


def _initial_states(config: SamplerConfig, rngs, dim):
    if config.init is not None:
        init = np.asarray(config.init, dtype=np.float64)
        if init.shape != (config.n_particles, dim):
            raise ValueError(f"init has shape {init.shape}, expected ({config.n_particles}, {dim})")
        return init.copy()
    return np.stack([rng.standard_normal(dim) for rng in rngs])


def _chunk_steps(config: SamplerConfig, dim, draws_per_step):
    per_step = config.n_particles * dim * draws_per_step * 8
    return max(1, min(config.n_steps, NOISE_CHUNK_BYTES // max(per_step, 1)))


def _check_finite(x, step):
    if np.all(np.isfinite(x)):
        return
    particle = int(np.flatnonzero(~np.isfinite(x).all(axis=1))[0])
    raise SamplerDivergence(particle, step)


def sgld_run(target, config: SamplerConfig) -> SamplerRun:
    """Unadjusted parallel Langevin dynamics with full-batch scores."""
    rngs = _particle_rngs(config)
    x = _initial_states(config, rngs, target.dim)
    dim = target.dim
    chunk = _chunk_steps(config, dim, draws_per_step=1)
    history = [] if config.collect_history else None
    step = 0
    while step < config.n_steps:
        span = min(chunk, config.n_steps - step)
        noise = np.stack([rng.standard_normal((span, dim)) for rng in rngs], axis=1)
        for k in range(span):
            x = langevin_step(x, target.score(x), config.step_size, noise[k])
            _check_finite(x, step + k)
            if history is not None:
                t = step + k
                if t >= config.burn_in and (t - config.burn_in) % config.thin == 0:
                    history.append(x.copy())
        step += span
    hist = np.stack(history) if history else None
    return SamplerRun(states=x, history=hist, acceptance_rate=None, n_steps=config.n_steps)


def _proposal_log_density(x_from, x_to, score_from, step_size):
    mean = x_from + 0.5 * step_size * score_from
    return -((x_to - mean) ** 2).sum(axis=1) / (2.0 * step_size)


def mala_run(target, config: SamplerConfig) -> SamplerRun:
    """Langevin proposals with Metropolis correction; exact invariance."""
    rngs = _particle_rngs(config)
    x = _initial_states(config, rngs, target.dim)
    dim = target.dim
    chunk = _chunk_steps(config, dim, draws_per_step=1)
    history = [] if config.collect_history else None
    logp = target.logp(x)
    score = target.score(x)
    n_accept = 0
    step = 0
    while step < config.n_steps:
        span = min(chunk, config.n_steps - step)
        noise = np.stack([rng.standard_normal((span, dim)) for rng in rngs], axis=1)
        uniforms = np.stack([rng.uniform(size=span) for rng in rngs], axis=1)
        for k in range(span):
            prop = langevin_step(x, score, config.step_size, noise[k])
            logp_prop = target.logp(prop)
            score_prop = target.score(prop)
            log_alpha = (
                logp_prop
                - logp
                + _proposal_log_density(prop, x, score_prop, config.step_size)
                - _proposal_log_density(x, prop, score, config.step_size)
            )
            accept = np.log(uniforms[k]) < log_alpha
            x = np.where(accept[:, None], prop, x)
            logp = np.where(accept, logp_prop, logp)
            score = np.where(accept[:, None], score_prop, score)
            n_accept += int(accept.sum())
            _check_finite(x, step + k)
            if history is not None:
                t = step + k
                if t >= config.burn_in and (t - config.burn_in) % config.thin == 0:
                    history.append(x.copy())
        step += span
    hist = np.stack(history) if history else None
    rate = n_accept / (config.n_steps * config.n_particles)
    return SamplerRun(states=x, history=hist, acceptance_rate=rate, n_steps=config.n_steps)
