"""Semi-implicit variational family.

A standard Gaussian mixing draw z feeds a rectifier network giving the
conditional mean; a learned per-coordinate log-scale rho gives the diagonal
Gaussian conditional layer.  Samples use the reparameterization
``x = mu(z) + sigma * xi`` with ``sigma = exp(rho)``, so sigma is positive by
construction and gradients pass through sampling.  The conditional score at a
reparameterized draw is simply ``-xi / sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import ForwardTape, NetArch, NetParams, net_forward_batch, net_init


@dataclass
class SIVParams:
    """Full variational parameter: network weights plus log-scales."""

    net: NetParams
    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=np.float64)
        if self.rho.shape != (self.net.arch.d_out,):
            raise ValueError(
                f"rho has shape {self.rho.shape}, expected ({self.net.arch.d_out},)"
            )

    @property
    def dim(self) -> int:
        return self.net.arch.d_out

    @property
    def d_z(self) -> int:
        return self.net.arch.d_in

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.rho)

    @property
    def n_params(self) -> int:
        return self.net.n_params + self.dim

    def copy(self) -> "SIVParams":
        return SIVParams(self.net.copy(), self.rho.copy())

    def to_flat(self) -> np.ndarray:
        """Network parameters in their flat order, then rho."""
        return np.concatenate([self.net.to_flat(), self.rho])

    @classmethod
    def from_flat(cls, arch: NetArch, flat: np.ndarray) -> "SIVParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (arch.n_params + arch.d_out,):
            raise ValueError(f"flat vector has length {flat.shape}, expected {arch.n_params + arch.d_out}")
        return cls(NetParams.from_flat(arch, flat[: arch.n_params]), flat[arch.n_params :].copy())


def siv_init(arch: NetArch, seed: int, rho_init: float | np.ndarray = 0.0) -> SIVParams:
    """Initialize the network from ``seed`` and the log-scales to a constant."""
    rho = np.broadcast_to(np.asarray(rho_init, dtype=np.float64), (arch.d_out,)).copy()
    return SIVParams(net_init(arch, seed), rho)


@dataclass
class SampleTriple:
    """One reparameterized draw."""

    z: np.ndarray
    xi: np.ndarray
    x: np.ndarray


@dataclass
class SampleBatch:
    """A batch of reparameterized draws with the forward tape retained."""

    z: np.ndarray  # (n, d_z)
    xi: np.ndarray  # (n, d)
    x: np.ndarray  # (n, d)
    tape: ForwardTape

    def __len__(self) -> int:
        return self.z.shape[0]

    def triple(self, i: int) -> SampleTriple:
        return SampleTriple(self.z[i], self.xi[i], self.x[i])


def siv_sample_batch(params: SIVParams, n: int, rng: np.random.Generator) -> SampleBatch:
    """Draw n reparameterized samples; mixing draws come before noise draws."""
    if n < 1:
        raise ValueError("batch size must be at least 1")
    z = rng.standard_normal((n, params.d_z))
    xi = rng.standard_normal((n, params.dim))
    mu, tape = net_forward_batch(params.net, z)
    x = mu + params.sigma * xi
    return SampleBatch(z, xi, x, tape)


def reparameterize(params: SIVParams, z: np.ndarray, xi: np.ndarray) -> SampleBatch:
    """Rebuild a sample batch from frozen base draws under new parameters.

    Used wherever common random numbers are needed, e.g. finite-difference
    checks of the gradient estimators.
    """
    z = np.asarray(z, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    mu, tape = net_forward_batch(params.net, z)
    return SampleBatch(z, xi, mu + params.sigma * xi, tape)


def conditional_score(sample: SampleTriple | SampleBatch, params: SIVParams) -> np.ndarray:
    """Score of the diagonal Gaussian conditional layer at the draw: -xi/sigma."""
    return -sample.xi / params.sigma


def f_vectors(batch: SampleBatch, params: SIVParams, target, beta_temp: float = 1.0) -> np.ndarray:
    """Tempered score residuals ``beta * s_p(x) + xi / sigma``, shape (n, d).

    This is the difference between the (tempered) target score and the
    conditional score, the quantity every discrepancy estimator consumes.
    """
    return beta_temp * target.score(batch.x) + batch.xi / params.sigma


def f_vector(triple: SampleTriple, params: SIVParams, target, beta_temp: float = 1.0) -> np.ndarray:
    """Single-draw version of ``f_vectors``."""
    return beta_temp * target.score(triple.x) + triple.xi / params.sigma
