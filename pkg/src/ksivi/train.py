"""Training loop: stochastic gradient descent on the squared discrepancy.

Each iteration draws fresh batches from the current variational family,
resolves the kernel bandwidth on those samples (held constant while
differentiating), evaluates the configured gradient estimator at the current
annealing temperature, and applies an Adam update.  The loop records a loss
trace and aborts with a diagnostic snapshot if anything goes non-finite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import ESTIMATOR_KINDS, value_and_grad
from .family import SIVParams, siv_sample_batch
from .kernels import KernelSpec, bandwidth_from_rule
from .nets import net_jacobian_frobenius
from .optim import AdamState, adam_step

BANDWIDTH_RULES = ("median", "median_sq_over_log_n", "fixed")


@dataclass(frozen=True)
class TrainConfig:
    iterations: int
    batch_size: int
    learning_rate: float
    estimator: str = "vanilla"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    bandwidth_rule: str = "median"
    anneal_start: float = 1.0  # 1.0 disables annealing
    anneal_iterations: int = 0
    reg_weight: float = 0.0
    clip_norm: float | None = None
    seed: int = 0
    log_every: int = 1

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iteration count must be nonnegative")
        if self.batch_size < 2:
            raise ValueError("batch size must be at least 2")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.estimator not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.bandwidth_rule not in BANDWIDTH_RULES:
            raise ValueError(f"unknown bandwidth rule {self.bandwidth_rule!r}")
        if not 0.0 < self.anneal_start <= 1.0:
            raise ValueError("annealing must start in (0, 1]")
        if self.reg_weight < 0:
            raise ValueError("regularization weight must be nonnegative")
        if self.log_every < 1:
            raise ValueError("log cadence must be at least 1")


@dataclass
class LossTrace:
    """Per-logged-iteration training records."""

    iterations: list[int] = field(default_factory=list)
    ksd2: list[float] = field(default_factory=list)
    bandwidth: list[float] = field(default_factory=list)
    beta_temp: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    wallclock_ms: list[float] = field(default_factory=list)

    def append(self, iteration, value, h, beta, gnorm, wallclock):
        if self.iterations and iteration <= self.iterations[-1]:
            raise ValueError("trace iterations must be strictly increasing")
        self.iterations.append(int(iteration))
        self.ksd2.append(float(value))
        self.bandwidth.append(float(h))
        self.beta_temp.append(float(beta))
        self.grad_norm.append(float(gnorm))
        self.wallclock_ms.append(float(wallclock))

    def __len__(self):
        return len(self.iterations)


class TrainingDivergence(RuntimeError):
    """Raised when the loss or gradient turns non-finite."""

    def __init__(self, iteration: int, params: SIVParams, detail: str):
        super().__init__(f"training diverged at iteration {iteration}: {detail}")
        self.iteration = iteration
        self.params = params


def anneal_beta(iteration: int, start: float = 1.0, anneal_iterations: int = 0) -> float:
    """Linear temperature ramp from ``start`` to 1, then constant 1."""
    if iteration < 0:
        raise ValueError("iteration must be nonnegative")
    if start >= 1.0 or anneal_iterations <= 0:
        return 1.0
    return min(1.0, start + (1.0 - start) * iteration / anneal_iterations)


def resolve_kernel(config: TrainConfig, samples: np.ndarray) -> KernelSpec:
    """Apply the bandwidth policy for this iteration's samples."""
    spec = config.kernel
    if spec.family != "rbf" or config.bandwidth_rule == "fixed":
        return spec
    return spec.with_bandwidth(bandwidth_from_rule(config.bandwidth_rule, samples))


def train(config: TrainConfig, target, init: SIVParams, iteration_hook=None):
    """Run the configured number of iterations from ``init``.

    Returns the final parameters and the loss trace.  ``iteration_hook``, if
    given, is called as ``hook(iteration, params)`` after every update.
    """
    rng = np.random.default_rng(config.seed)
    params = init.copy()
    flat = params.to_flat()
    adam = AdamState.init(flat.size)
    trace = LossTrace()
    arch = init.net.arch
    started = time.perf_counter()

    for t in range(config.iterations):
        beta = anneal_beta(t, config.anneal_start, config.anneal_iterations)
        if config.estimator == "vanilla":
            b1 = siv_sample_batch(params, config.batch_size, rng)
            b2 = siv_sample_batch(params, config.batch_size, rng)
            pooled = np.concatenate([b1.x, b2.x], axis=0)
            kernel = resolve_kernel(config, pooled)
            batches = (b1, b2)
        else:
            b1 = siv_sample_batch(params, config.batch_size, rng)
            kernel = resolve_kernel(config, b1.x)
            batches = b1
        value, grad = value_and_grad(
            params, target, kernel, batches, config.estimator, beta, config.reg_weight
        )
        if not np.isfinite(value):
            raise TrainingDivergence(t, params, f"loss estimate is {value}")
        if not np.all(np.isfinite(grad)):
            bad = int(np.flatnonzero(~np.isfinite(grad))[0])
            raise TrainingDivergence(t, params, f"gradient coordinate {bad} is non-finite")
        adam, flat = adam_step(adam, flat, grad, config.learning_rate, config.clip_norm)
        params = SIVParams.from_flat(arch, flat)
        if t % config.log_every == 0:
            elapsed_ms = (time.perf_counter() - started) * 1e3
            trace.append(t, value, kernel.bandwidth, beta, float(np.linalg.norm(grad)), elapsed_ms)
        if iteration_hook is not None:
            iteration_hook(t, params)
    return params, trace


def smoothness_diagnostic(params: SIVParams, n_probes: int, rng: np.random.Generator) -> dict:
    """Mean/max Frobenius norm of the mean network's parameter Jacobian.

    Probes are mixing draws; the summary tracks how smooth the learned mean
    map stays over the region the family actually samples from.
    """
    if n_probes < 1:
        raise ValueError("need at least one probe")
    norms = np.empty(n_probes)
    for i in range(n_probes):
        z = rng.standard_normal(params.d_z)
        norms[i] = net_jacobian_frobenius(params.net, z)
    return {
        "n_probes": int(n_probes),
        "mean_jacobian_norm": float(norms.mean()),
        "max_jacobian_norm": float(norms.max()),
    }
