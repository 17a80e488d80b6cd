"""Regularization sweep over admissible sign patterns.

With a diagonal Gram matrix ``d`` and anchor norms ``n`` the objective

    R(eps) = (1/m) sum_i d_i^2 eps_i^2 + lambda0 sum_i n_i |beta_i + eps_i|

separates per coordinate, so restricting ``sign(beta + eps)`` to an orthant
``s`` has a closed-form minimizer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

UNREGULARIZED = "Unregularized"
REGULARIZED = "Regularized"
AMBIGUOUS = "Ambiguous"


@dataclass(frozen=True)
class RegConfig:
    lambda0: float
    loss: str = "mean_squared"
    phi: str = "identity"

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")
        if self.loss != "mean_squared" or self.phi != "identity":
            raise ValueError("only the mean-squared loss with phi = identity is supported")


@dataclass(frozen=True)
class OrthantResult:
    s: tuple
    epsilon: tuple
    coefficients: tuple
    r_value: float
    feasible: bool = True


@dataclass(frozen=True)
class SelectionReport:
    sweep: tuple
    unregularized_interval: tuple
    decision: str
    chosen_sign: Optional[tuple] = None
    ambiguous: bool = False

    @property
    def best(self) -> Optional[OrthantResult]:
        return self.sweep[0] if self.sweep else None


def objective(epsilon, beta, diag, anchor_norms, m, lambda0) -> float:
    eps = np.asarray(epsilon, dtype=float)
    coef = np.asarray(beta, dtype=float) + eps
    d = np.asarray(diag, dtype=float)
    n = np.asarray(anchor_norms, dtype=float)
    return float(np.sum(d * d * eps * eps) / m + lambda0 * np.sum(n * np.abs(coef)))


def _coordinate_minimizer(s, beta, d, n, m, lambda0):
    if s == 0:
        return -beta
    shift = lambda0 * n * m / (2.0 * d * d)
    if s > 0:
        return max(-beta, -shift)
    return min(-beta, shift)


def orthant_minimize(s, beta, diag, anchor_norms, m, cfg: RegConfig) -> OrthantResult:
    """Minimize ``R`` over ``{eps : s_i (beta_i + eps_i) >= 0, s_i = 0 => beta_i + eps_i = 0}``."""
    s = tuple(int(v) for v in s)
    beta = np.asarray(beta, dtype=float)
    diag = np.asarray(diag, dtype=float)
    anchor_norms = np.asarray(anchor_norms, dtype=float)
    if not (len(s) == beta.size == diag.size == anchor_norms.size):
        raise ValueError("sign vector, coefficients, diagonal and anchor norms must have equal length")
    if np.any(diag <= 0):
        raise ValueError(f"degenerate diagonal: entries must be positive, got {diag.tolist()}")
    eps = np.array([
        _coordinate_minimizer(si, bi, di, ni, m, cfg.lambda0)
        for si, bi, di, ni in zip(s, beta, diag, anchor_norms)
    ])
    coef = beta + eps
    r = objective(eps, beta, diag, anchor_norms, m, cfg.lambda0)
    return OrthantResult(s, tuple(eps.tolist()), tuple(coef.tolist()), r, True)


def sweep(admissible, beta, diag, anchor_norms, m, cfg: RegConfig):
    """One result per admissible sign vector, ascending in ``r_value``.

    Exact ties are ordered by the sign vector in plain lexicographic order.
    """
    results = [orthant_minimize(s, beta, diag, anchor_norms, m, cfg) for s in admissible]
    return sorted(results, key=lambda r: (r.r_value, r.s))


def r_interval_unregularized(norm_lower, norm_upper, cfg: RegConfig):
    """``R`` of an interpolant (zero loss) lies in ``lambda0 * [norm_lower, norm_upper]``."""
    return (cfg.lambda0 * norm_lower, cfg.lambda0 * norm_upper)


def select(sweep_results, interval) -> SelectionReport:
    """Choose between the interpolant and the best regularized candidate.

    Overlapping ranges are reported as ambiguous and resolved in favour of
    the interpolant.
    """
    sweep_results = tuple(sweep_results)
    low, high = interval
    if low > high:
        raise ValueError(f"invalid interval [{low}, {high}]")
    if not sweep_results:
        return SelectionReport(sweep_results, (low, high), UNREGULARIZED)
    best = sweep_results[0]
    if high < best.r_value:
        return SelectionReport(sweep_results, (low, high), UNREGULARIZED)
    if best.r_value < low:
        return SelectionReport(sweep_results, (low, high), REGULARIZED, best.s)
    return SelectionReport(sweep_results, (low, high), AMBIGUOUS, ambiguous=True)
