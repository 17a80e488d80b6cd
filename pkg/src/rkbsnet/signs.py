"""Admissible sign vectors.

``s`` in ``{-1, 0, 1}^m`` is admissible when ``||sum_i s_i k(x_i, .)||_inf <= 1``.
With ``scaled_witnesses`` each term is divided by ``||k(x_i, .)||_inf`` first,
which reduces to the plain test when every input lies in the unit box.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .kernel import KernelContext, input_bound
from .network import ParamVector, output_bias_selector
from .supnorm import (
    FLOAT_SLACK,
    Combination,
    SearchConfig,
    SupNormEstimate,
    _depth2_family,
    analytic_upper,
    estimate_sup,
)

ADMISSIBILITY_TOL = 1e-9
DEFAULT_CAP = 12

CERTIFIED_ADMISSIBLE = "CertifiedAdmissible"
CERTIFIED_INADMISSIBLE = "CertifiedInadmissible"
UNCERTIFIED = "Uncertified"


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class AdmissibilityVerdict:
    kind: str
    certificate: Optional[str] = None
    witness: Optional[ParamVector] = None
    value: Optional[float] = None
    estimate: Optional[SupNormEstimate] = None

    @property
    def admissible(self) -> bool:
        return self.kind == CERTIFIED_ADMISSIBLE

    @property
    def inadmissible(self) -> bool:
        return self.kind == CERTIFIED_INADMISSIBLE

    @property
    def uncertified(self) -> bool:
        return self.kind == UNCERTIFIED


def witness_weights(X, ctx: KernelContext, scaled_witnesses=True) -> np.ndarray:
    """Per-point weights ``1 / ||k(x_i, .)||_inf`` (or ones when unscaled)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not scaled_witnesses:
        return np.ones(X.shape[0])
    return np.array([1.0 / input_bound(ctx, x) for x in X])


def sign_combination(s, X, ctx, component=0, scaled_witnesses=True) -> Combination:
    s = np.asarray(s, dtype=float)
    return Combination.from_arrays(s * witness_weights(X, ctx, scaled_witnesses), X, ctx, component)


def _inadmissible(comb, theta, estimate=None):
    value = abs(comb(theta))
    if value > 1.0 + ADMISSIBILITY_TOL:
        return AdmissibilityVerdict(CERTIFIED_INADMISSIBLE, witness=theta, value=value, estimate=estimate)
    return None


def is_admissible(s, X, ctx: KernelContext, cfg: Optional[SearchConfig] = None,
                  component=0, scaled_witnesses=True) -> AdmissibilityVerdict:
    """Classify one sign vector, cheapest certificate first.

    The ladder: zero vector; the constant selector (all weights zero, output
    bias 1, where every kernel section equals 1); single unit evaluations;
    opposite-sign pairs under the one-hidden-layer difference bound; and
    finally the numerical bracket from :func:`estimate_sup`.
    """
    s = tuple(int(v) for v in s)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(s) != X.shape[0]:
        raise ValueError(f"sign vector of length {len(s)} for {X.shape[0]} data points")
    if any(v not in (-1, 0, 1) for v in s):
        raise ValueError(f"sign entries must be -1, 0 or 1, got {s}")
    if not any(s):
        return AdmissibilityVerdict(CERTIFIED_ADMISSIBLE, "zero", value=0.0)

    comb = sign_combination(s, X, ctx, component, scaled_witnesses)
    verdict = _inadmissible(comb, output_bias_selector(ctx.arch, component))
    if verdict is not None:
        return verdict

    support = [i for i, v in enumerate(s) if v]
    if ctx.certified:
        bounds = [abs(a) * input_bound(ctx, x) for a, x in comb.terms]
        if len(support) == 1 and bounds[support[0]] <= 1.0 + FLOAT_SLACK:
            return AdmissibilityVerdict(CERTIFIED_ADMISSIBLE, "unit evaluation", value=bounds[support[0]])
        if (len(support) == 2 and s[support[0]] == -s[support[1]] and _depth2_family(ctx)
                and analytic_upper(comb) <= 1.0 + FLOAT_SLACK):
            return AdmissibilityVerdict(CERTIFIED_ADMISSIBLE, "pairwise difference bound",
                                        value=analytic_upper(comb))

    cfg = cfg or SearchConfig()
    if cfg.starts > 8:
        # screening pass: a few starts usually expose an inadmissible vector
        est = estimate_sup(comb, replace(cfg, starts=cfg.starts // 8))
        if est.lower > 1.0 + ADMISSIBILITY_TOL:
            verdict = _inadmissible(comb, est.witness, est)
            if verdict is not None:
                return verdict
    est = estimate_sup(comb, cfg)
    if est.lower > 1.0 + ADMISSIBILITY_TOL:
        verdict = _inadmissible(comb, est.witness, est)
        if verdict is not None:
            return verdict
    if est.upper <= 1.0 + FLOAT_SLACK:
        return AdmissibilityVerdict(CERTIFIED_ADMISSIBLE, "analytic upper", value=est.upper, estimate=est)
    return AdmissibilityVerdict(UNCERTIFIED, estimate=est)


def sign_vectors(m):
    """All of ``{-1, 0, 1}^m``, lexicographic with ``+1 < 0 < -1`` per coordinate."""
    return [tuple(v) for v in itertools.product((1, 0, -1), repeat=m)]


def enumerate_admissible(X, ctx: KernelContext, cfg: Optional[SearchConfig] = None,
                         component=0, scaled_witnesses=True, cap=DEFAULT_CAP, n_jobs=1):
    """Verdicts for every sign vector of the dataset, in :func:`sign_vectors` order."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = X.shape[0] if X.size else 0
    if m > cap:
        raise EnumerationTooLarge(
            f"{m} data points would need 3^{m} = {3 ** m} sign vectors; the cap is m <= {cap}"
        )
    vectors = sign_vectors(m)
    if m == 0:
        return [((), AdmissibilityVerdict(CERTIFIED_ADMISSIBLE, "zero", value=0.0))]

    def check(s):
        return is_admissible(s, X, ctx, cfg, component, scaled_witnesses)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            verdicts = list(pool.map(check, vectors))
    else:
        verdicts = [check(s) for s in vectors]
    return list(zip(vectors, verdicts))


def admissible_set(table, include_uncertified=False):
    """The sign vectors a table certifies (optionally plus the uncertified ones)."""
    keep = {CERTIFIED_ADMISSIBLE}
    if include_uncertified:
        keep.add(UNCERTIFIED)
    return [s for s, v in table if v.kind in keep]
