"""The network-induced kernel ``k(x, theta) = f_theta(x) * xi(theta)``.

``xi(theta) = 1 / max(1, ||theta||**p)`` damps large parameters so that each
section ``k(x, .)`` is bounded by ``max(1, ||x||_inf)`` and vanishes as
``||theta|| -> inf`` once ``p >= l + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import (
    Architecture,
    ParamVector,
    ShapeError,
    forward_batch,
    pack,
    param_norm,
    param_norm_batch,
    selector_chain,
)


class CertificationUnavailable(RuntimeError):
    """The analytic bounds do not apply to this kernel configuration."""


@dataclass(frozen=True)
class KernelContext:
    """An architecture together with the decay exponent of ``xi``.

    ``decay_exponent`` defaults to ``depth + 1``.
    """

    arch: Architecture
    decay_exponent: Optional[float] = None

    def __post_init__(self):
        p = self.arch.depth + 1 if self.decay_exponent is None else float(self.decay_exponent)
        if not p > 0:
            raise ValueError(f"decay exponent must be positive, got {p}")
        object.__setattr__(self, "decay_exponent", float(p))

    @property
    def p(self) -> float:
        return self.decay_exponent

    @property
    def certified(self) -> bool:
        """Whether ``|k(x, theta)| <= max(1, ||x||_inf)`` and the tail decay hold."""
        return self.p >= self.arch.depth + 1

    def scalar_slice(self) -> "KernelContext":
        return KernelContext(self.arch.scalar_slice(), self.decay_exponent)


def xi(ctx: KernelContext, theta: ParamVector) -> float:
    return 1.0 / max(1.0, param_norm(theta) ** ctx.p)


def xi_batch(ctx: KernelContext, flat_thetas) -> np.ndarray:
    norms = param_norm_batch(ctx.arch, np.atleast_2d(flat_thetas))
    return 1.0 / np.maximum(1.0, norms ** ctx.p)


def kernel_eval(ctx: KernelContext, x, theta: ParamVector) -> np.ndarray:
    """``k(x, theta)`` as a length-t vector (one entry per output unit)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != ctx.arch.input_dim:
        raise ShapeError(f"layer 1: input has dimension {x.shape[0]}, expected {ctx.arch.input_dim}")
    return kernel_batch(ctx, pack(theta)[None, :], x[None, :])[0, 0]


def kernel_batch(ctx: KernelContext, flat_thetas, X, norms=None) -> np.ndarray:
    """Kernel values of shape ``(n, m, t)`` for ``n`` parameters and ``m`` inputs.

    ``norms`` may carry precomputed parameter norms of the rows.
    """
    thetas = np.atleast_2d(np.asarray(flat_thetas, dtype=float))
    if norms is None:
        norms = param_norm_batch(ctx.arch, thetas)
    out = forward_batch(ctx.arch, thetas, X)
    return out / np.maximum(1.0, norms ** ctx.p)[:, None, None]


def gram_matrix(ctx: KernelContext, X, anchors, component=0) -> np.ndarray:
    """``M[i, j] = k_component(x_i, theta_j)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(anchors) == 0:
        return np.zeros((X.shape[0], 0))
    flat = np.stack([pack(t) for t in anchors])
    return kernel_batch(ctx, flat, X)[:, :, component].T


def input_bound(ctx: KernelContext, x) -> float:
    """``C(x) = max(1, ||x||_inf)``, an upper bound on ``|k_i(x, theta)|`` for every theta."""
    if not ctx.certified:
        raise CertificationUnavailable(
            f"decay exponent {ctx.p:g} is below depth + 1 = {ctx.arch.depth + 1}; "
            "kernel sections are not certified to be bounded"
        )
    x = np.asarray(x, dtype=float).reshape(-1)
    return max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)


def norm_witness(ctx: KernelContext, x, component=0) -> ParamVector:
    """A unit-norm selector chain at which ``k_component(x, .)`` equals ``C(x)``.

    Reads the coordinate of largest magnitude (first index on ties) when
    ``||x||_inf >= 1`` and the constant 1 through a first-layer bias otherwise.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    c = int(np.argmax(np.abs(x)))
    if abs(x[c]) >= 1.0:
        return selector_chain(ctx.arch, coord=c, sign=1.0 if x[c] > 0 else -1.0, output=component)
    return selector_chain(ctx.arch, coord=None, output=component)


def evaluation_sup_norm(ctx: KernelContext, x, component=0, cfg=None):
    """``||k(x, .)||_inf`` over the parameter space.

    Exact when the analytic bound applies: the selector witness attains
    ``C(x)``.  Otherwise falls back to a numerical bracket.
    """
    from .supnorm import Combination, SupNormEstimate, estimate_sup

    x = np.asarray(x, dtype=float).reshape(-1)
    if ctx.certified:
        witness = norm_witness(ctx, x, component)
        value = abs(float(kernel_eval(ctx, x, witness)[component]))
        bound = input_bound(ctx, x)
        if bound - value <= 1e-12 * bound:
            return SupNormEstimate(value, bound, witness, SupNormEstimate.CERTIFIED)
    return estimate_sup(Combination(((1.0, x),), ctx, component), cfg)
