"""Small dense rectifier networks with exact reverse-mode parameter gradients.

The forward map is a fixed-architecture MLP: rectifier on hidden layers,
identity on the output layer.  Everything is float64 and batch-first; the
single-sample entry points wrap the batched ones.  Gradients with respect to
the weights and biases are computed by hand-written backpropagation, which is
all the training loop ever needs (vector-Jacobian products, never full
Jacobians).

Flat parameter layout, used by the optimizer and by serialization: layers in
order, weights before biases, weight matrices row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NetArch:
    """Layer widths ``[d_in, h_1, ..., d_out]``."""

    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2:
            raise ValueError("architecture needs at least an input and an output width")
        if any(w < 1 for w in widths):
            raise ValueError(f"all layer widths must be >= 1, got {widths}")
        object.__setattr__(self, "widths", widths)

    @property
    def d_in(self) -> int:
        return self.widths[0]

    @property
    def d_out(self) -> int:
        return self.widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    @property
    def n_params(self) -> int:
        return sum(o * i + o for i, o in zip(self.widths[:-1], self.widths[1:]))


@dataclass
class NetParams:
    """Weights ``(out, in)`` and biases ``(out,)`` per layer, float64."""

    arch: NetArch
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        expect = list(zip(self.arch.widths[1:], self.arch.widths[:-1]))
        if len(self.weights) != self.arch.n_layers or len(self.biases) != self.arch.n_layers:
            raise ValueError("wrong number of layers for architecture")
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != expect[layer]:
                raise ValueError(f"layer {layer} weight shape {w.shape} != {expect[layer]}")
            if b.shape != (expect[layer][0],):
                raise ValueError(f"layer {layer} bias shape {b.shape} != ({expect[layer][0]},)")

    @property
    def n_params(self) -> int:
        return self.arch.n_params

    def copy(self) -> "NetParams":
        return NetParams(self.arch, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_flat(self) -> np.ndarray:
        """Concatenate all parameters in the documented flat order."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, arch: NetArch, flat: np.ndarray) -> "NetParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (arch.n_params,):
            raise ValueError(f"flat vector has length {flat.shape}, expected {arch.n_params}")
        weights, biases, pos = [], [], 0
        for i, o in zip(arch.widths[:-1], arch.widths[1:]):
            weights.append(flat[pos : pos + o * i].reshape(o, i).copy())
            pos += o * i
            biases.append(flat[pos : pos + o].copy())
            pos += o
        return cls(arch, weights, biases)

    @classmethod
    def zeros(cls, arch: NetArch) -> "NetParams":
        return cls(
            arch,
            [np.zeros((o, i)) for i, o in zip(arch.widths[:-1], arch.widths[1:])],
            [np.zeros(o) for o in arch.widths[1:]],
        )


def net_init(arch: NetArch, seed: int) -> NetParams:
    """Rectifier-scaled Gaussian init: W ~ N(0, 2/fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for i, o in zip(arch.widths[:-1], arch.widths[1:]):
        weights.append(rng.standard_normal((o, i)) * np.sqrt(2.0 / i))
        biases.append(np.zeros(o))
    return NetParams(arch, weights, biases)


@dataclass
class ForwardTape:
    """Cached forward state: inputs to every layer plus hidden rectifier masks."""

    arch: NetArch
    inputs: list[np.ndarray]  # a_0 .. a_{L-1}, each (n, width)
    masks: list[np.ndarray]  # rectifier masks for hidden layers, (n, width), bool

    @property
    def n(self) -> int:
        return self.inputs[0].shape[0]


def net_forward_batch(params: NetParams, z: np.ndarray) -> tuple[np.ndarray, ForwardTape]:
    """Evaluate the network on a batch ``z`` of shape (n, d_in)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != params.arch.d_in:
        raise ValueError(f"batch input shape {z.shape} incompatible with input width {params.arch.d_in}")
    a = z
    inputs = [a]
    masks = []
    n_layers = params.arch.n_layers
    for layer in range(n_layers):
        pre = a @ params.weights[layer].T + params.biases[layer]
        if layer < n_layers - 1:
            mask = pre > 0.0  # subgradient at exactly 0 is taken as 0
            a = np.where(mask, pre, 0.0)
            inputs.append(a)
            masks.append(mask)
        else:
            a = pre
    return a, ForwardTape(params.arch, inputs, masks)


def net_forward(params: NetParams, z: np.ndarray) -> tuple[np.ndarray, ForwardTape]:
    """Single-sample forward pass; ``z`` has shape (d_in,)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (params.arch.d_in,):
        raise ValueError(f"input shape {z.shape} incompatible with input width {params.arch.d_in}")
    out, tape = net_forward_batch(params, z[None, :])
    return out[0], tape


def _check_tape(params: NetParams, tape: ForwardTape) -> None:
    if tape.arch != params.arch:
        raise ValueError("tape was produced by a network with a different architecture")


def net_vjp_batch_sum(params: NetParams, tape: ForwardTape, upstream: np.ndarray) -> np.ndarray:
    """Sum over the batch of per-sample vector-Jacobian products.

    ``upstream`` has shape (n, d_out); the result is the flat gradient of
    ``sum_i <upstream_i, net(z_i)>`` with respect to all weights and biases.
    """
    _check_tape(params, tape)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (tape.n, params.arch.d_out):
        raise ValueError(f"upstream shape {upstream.shape} != ({tape.n}, {params.arch.d_out})")
    n_layers = params.arch.n_layers
    grads_w: list[np.ndarray] = [np.empty(0)] * n_layers
    grads_b: list[np.ndarray] = [np.empty(0)] * n_layers
    delta = upstream
    for layer in range(n_layers - 1, -1, -1):
        grads_w[layer] = delta.T @ tape.inputs[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * tape.masks[layer - 1]
    parts = []
    for gw, gb in zip(grads_w, grads_b):
        parts.append(gw.ravel())
        parts.append(gb)
    return np.concatenate(parts)


def net_vjp(params: NetParams, tape: ForwardTape, upstream: np.ndarray) -> np.ndarray:
    """Exact vector-Jacobian product for a single-sample tape."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if tape.n != 1:
        raise ValueError("net_vjp expects a single-sample tape; use net_vjp_batch_sum for batches")
    return net_vjp_batch_sum(params, tape, upstream[None, :])


def net_jacobian_frobenius(params: NetParams, z: np.ndarray) -> float:
    """Frobenius norm of the full parameter Jacobian at ``z``.

    All d_out unit upstream vectors are backpropagated simultaneously (rows of
    ``delta``).  Since they share one forward pass, the squared norm of each
    layer's weight block factorizes as ||delta||_F^2 * ||a||^2, with the bias
    block contributing ||delta||_F^2.
    """
    _, tape = net_forward(params, z)
    n_layers = params.arch.n_layers
    delta = np.eye(params.arch.d_out)
    total = 0.0
    for layer in range(n_layers - 1, -1, -1):
        a = tape.inputs[layer][0]
        total += float((delta**2).sum()) * (float((a**2).sum()) + 1.0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * tape.masks[layer - 1][0]
    return float(np.sqrt(total))
