"""Fixed-architecture feedforward networks.

A network is described by an :class:`Architecture` (layer widths and the
activation) and a :class:`ParamVector` holding one weight matrix and one bias
vector per layer.  The flat packing order is layer-major; inside a layer the
weight matrix is written row-major and followed by the bias vector, so the
2-2-1 network packs as ``(w1, w2, w3, w4, b1, b2, w5, w6, b3)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTIVATIONS = ("relu", "identity")


class ShapeError(ValueError):
    """Raised when an input or parameter does not match the architecture."""


def _relu(z):
    return np.maximum(z, 0.0)


def _identity(z):
    return z


_ACTIVATION_FUNCS = {"relu": _relu, "identity": _identity}


@dataclass(frozen=True)
class Architecture:
    """Layer widths ``(m0, ..., ml)`` plus the hidden activation.

    Only activations that are 1-Lipschitz and vanish at zero are accepted;
    the kernel bounds rely on both properties.
    """

    layer_widths: tuple
    activation: str = "relu"
    output_activation_applied: bool = False

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2:
            raise ValueError("an architecture needs at least one layer (two widths)")
        if any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be positive, got {widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unsupported activation {self.activation!r}; "
                f"expected one of {ACTIVATIONS} (1-Lipschitz with sigma(0) = 0)"
            )
        object.__setattr__(self, "layer_widths", widths)
        object.__setattr__(self, "output_activation_applied", bool(self.output_activation_applied))

    @property
    def depth(self) -> int:
        """Number of affine layers ``l``."""
        return len(self.layer_widths) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def output_dim(self) -> int:
        return self.layer_widths[-1]

    @property
    def layer_shapes(self):
        w = self.layer_widths
        return [(w[k + 1], w[k]) for k in range(self.depth)]

    @property
    def n_params(self) -> int:
        return sum(rows * (cols + 1) for rows, cols in self.layer_shapes)

    def scalar_slice(self) -> "Architecture":
        """The same network with a single output unit."""
        return Architecture(self.layer_widths[:-1] + (1,), self.activation,
                            self.output_activation_applied)

    def sigma(self, z):
        return _ACTIVATION_FUNCS[self.activation](z)

    def layer_offsets(self):
        """Flat offsets ``(start, weight_end, bias_end)`` for every layer."""
        offsets = []
        start = 0
        for rows, cols in self.layer_shapes:
            w_end = start + rows * cols
            b_end = w_end + rows
            offsets.append((start, w_end, b_end))
            start = b_end
        return offsets


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Per-layer weights ``W[k]`` (shape ``m_k x m_{k-1}``) and biases ``b[k]``."""

    arch: Architecture
    weights: tuple
    biases: tuple

    def __post_init__(self):
        if len(self.weights) != self.arch.depth or len(self.biases) != self.arch.depth:
            raise ShapeError(
                f"expected {self.arch.depth} layers, got {len(self.weights)} weight "
                f"matrices and {len(self.biases)} bias vectors"
            )
        weights, biases = [], []
        for k, ((rows, cols), W, b) in enumerate(zip(self.arch.layer_shapes, self.weights, self.biases)):
            W = _frozen(W)
            b = _frozen(b).reshape(-1)
            if W.shape != (rows, cols):
                raise ShapeError(f"layer {k + 1}: weight shape {W.shape}, expected {(rows, cols)}")
            if b.shape != (rows,):
                raise ShapeError(f"layer {k + 1}: bias length {b.shape[0]}, expected {rows}")
            weights.append(W)
            biases.append(b)
        object.__setattr__(self, "weights", tuple(weights))
        object.__setattr__(self, "biases", tuple(biases))

    @classmethod
    def zeros(cls, arch: Architecture) -> "ParamVector":
        return unpack(arch, np.zeros(arch.n_params))

    def __eq__(self, other):
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.arch == other.arch and np.array_equal(pack(self), pack(other))

    def __hash__(self):
        return hash((self.arch, pack(self).tobytes()))

    def __repr__(self):
        flat = ", ".join(f"{v:g}" for v in pack(self))
        return f"ParamVector({self.arch.layer_widths}, [{flat}])"


def pack(theta: ParamVector) -> np.ndarray:
    """Flatten ``theta``: per layer, row-major weights then the bias vector."""
    parts = []
    for W, b in zip(theta.weights, theta.biases):
        parts.append(W.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unpack(arch: Architecture, flat: Sequence[float]) -> ParamVector:
    flat = np.asarray(flat, dtype=float).reshape(-1)
    if flat.shape[0] != arch.n_params:
        raise ShapeError(
            f"flat parameter length {flat.shape[0]} does not match architecture "
            f"{arch.layer_widths} ({arch.n_params} parameters)"
        )
    weights, biases = [], []
    for (rows, cols), (start, w_end, b_end) in zip(arch.layer_shapes, arch.layer_offsets()):
        weights.append(flat[start:w_end].reshape(rows, cols))
        biases.append(flat[w_end:b_end])
    return ParamVector(arch, tuple(weights), tuple(biases))


def forward(arch: Architecture, theta: ParamVector, x) -> np.ndarray:
    """Evaluate the network at a single input ``x``; returns a length-t vector."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != arch.input_dim:
        raise ShapeError(f"layer 1: input has dimension {x.shape[0]}, expected {arch.input_dim}")
    if theta.arch.layer_widths != arch.layer_widths:
        raise ShapeError(
            f"parameters built for {theta.arch.layer_widths}, network is {arch.layer_widths}"
        )
    flat = pack(theta)[None, :]
    return forward_batch(arch, flat, x[None, :])[0, 0]


def forward_batch(arch: Architecture, flat_thetas, X) -> np.ndarray:
    """Evaluate many parameter vectors at many inputs.

    ``flat_thetas`` has shape ``(n, P)``, ``X`` shape ``(m, s)``.  Returns an
    array of shape ``(n, m, t)``.  Every entry depends only on its own row of
    ``flat_thetas`` (sums run in a fixed sequential order), so results do not
    change with how a batch is split.
    """
    thetas = np.asarray(flat_thetas, dtype=float)
    X = np.asarray(X, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != arch.n_params:
        raise ShapeError(f"parameter batch must have shape (n, {arch.n_params}), got {thetas.shape}")
    if X.ndim != 2 or X.shape[1] != arch.input_dim:
        raise ShapeError(f"layer 1: inputs must have shape (m, {arch.input_dim}), got {X.shape}")
    n = thetas.shape[0]
    z = np.broadcast_to(X[None, :, :], (n,) + X.shape)
    last = arch.depth - 1
    for k, ((rows, cols), (start, w_end, b_end)) in enumerate(zip(arch.layer_shapes, arch.layer_offsets())):
        W = thetas[:, start:w_end].reshape(n, 1, rows, cols)
        b = thetas[:, w_end:b_end].reshape(n, 1, rows)
        acc = W[..., 0] * z[:, :, None, 0]
        for j in range(1, cols):
            acc = acc + W[..., j] * z[:, :, None, j]
        z = acc + b
        if k < last or arch.output_activation_applied:
            z = arch.sigma(z)
    return z


def param_norm(theta: ParamVector) -> float:
    """Largest l1 norm of a neuron row ``(W[k][i, :], b[k][i])`` over all layers."""
    best = 0.0
    for W, b in zip(theta.weights, theta.biases):
        rows = np.abs(W).sum(axis=1) + np.abs(b)
        best = max(best, float(rows.max()))
    return best


def param_norm_batch(arch: Architecture, flat_thetas) -> np.ndarray:
    thetas = np.asarray(flat_thetas, dtype=float)
    A = np.abs(thetas)
    out = np.zeros(thetas.shape[0])
    for (rows, cols), (start, w_end, b_end) in zip(arch.layer_shapes, arch.layer_offsets()):
        for i in range(rows):
            row = A[:, w_end + i]
            for j in range(cols):
                row = row + A[:, start + i * cols + j]
            out = np.maximum(out, row)
    return out


def selector_chain(arch: Architecture, coord=None, sign=1.0, output=0, scale=1.0) -> ParamVector:
    """Sparse parameters routing one input coordinate (or the constant 1) to an output.

    The first layer's neuron 0 reads ``sign * x[coord]`` (or the constant 1
    through its bias when ``coord`` is None); every deeper layer passes neuron
    0 through with weight 1, and the last layer writes to output ``output``.
    Every active row has l1 norm ``scale``, so with ``scale=1`` the parameter
    norm is 1.
    """
    flat = np.zeros(arch.n_params)
    offsets = arch.layer_offsets()
    start, w_end, _ = offsets[0]
    cols = arch.input_dim
    row = output if arch.depth == 1 else 0
    if coord is None:
        flat[w_end + row] = scale
    else:
        flat[start + row * cols + coord] = sign * scale
    for k in range(1, arch.depth):
        start, _, _ = offsets[k]
        rows, cols = arch.layer_shapes[k]
        row = output if k == arch.depth - 1 else 0
        flat[start + row * cols] = scale
    return unpack(arch, flat)


def output_bias_selector(arch: Architecture, output=0, value=1.0) -> ParamVector:
    """All weights zero and output bias ``value``: a constant network."""
    flat = np.zeros(arch.n_params)
    _, w_end, _ = arch.layer_offsets()[-1]
    flat[w_end + output] = value
    return unpack(arch, flat)
