"""Minimal-norm interpolation through diagonal Gram matrices.

The pipeline for one scalar output: find anchors ``theta_j`` making
``M[i, j] = k(x_i, theta_j)`` diagonal, keep the largest greedily-found subset
of points for which that works, solve ``M beta = y``, and bracket the norm of
``f = sum_j beta_j k(., theta_j)``.  The expansion is certified minimal when
the (orientation-adjusted) sign of ``beta`` is admissible and every anchor
attains its norm.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .kernel import KernelContext, gram_matrix, input_bound, kernel_batch
from .network import Architecture, ParamVector, forward_batch, pack, selector_chain, unpack
from .regularizer import RegConfig, r_interval_unregularized, select, sweep
from .signs import (
    DEFAULT_CAP,
    admissible_set,
    enumerate_admissible,
    is_admissible,
    witness_weights,
)
from .supnorm import (
    _ANCHOR_KEY,
    Combination,
    SearchConfig,
    dual_point_norm,
    estimate_sup,
    maximize,
    structured_seeds,
    tail_radius,
)

logger = logging.getLogger(__name__)

OFF_DIAGONAL_TOL = 1e-9
INTERPOLATION_TOL = 1e-9
CERTIFICATION_TOL = 1e-9
MIN_ANCHOR_VALUE = 1e-6
CONDITION_LIMIT = 1e12

CERTIFIED_MINIMAL = "CertifiedMinimal"
CANDIDATE = "Candidate"


class IllConditionedError(np.linalg.LinAlgError):
    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class NoAnchorsError(RuntimeError):
    def __init__(self, message, reasons):
        super().__init__(message)
        self.reasons = reasons


@dataclass(frozen=True, eq=False)
class Dataset:
    """Inputs ``X`` (m x s) and outputs ``Y`` (m x t).

    Repeated inputs with equal outputs are collapsed; repeated inputs with
    different outputs are rejected.
    """

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
        if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise ValueError(f"inputs {X.shape} and outputs {Y.shape} do not pair up")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("dataset contains non-finite values")
        keep = []
        seen = {}
        for i, x in enumerate(X):
            key = x.tobytes()
            if key in seen:
                j = seen[key]
                if not np.array_equal(Y[i], Y[j]):
                    raise ValueError(f"points {j} and {i} share input {x.tolist()} but have different outputs")
                continue
            seen[key] = i
            keep.append(i)
        X, Y = X[keep], Y[keep]
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def s(self):
        return self.X.shape[1]

    @property
    def t(self):
        return self.Y.shape[1]


@dataclass(frozen=True)
class AnchorResult:
    index: int
    theta: Optional[ParamVector]
    method: Optional[str]
    reason: str = ""

    @property
    def ok(self):
        return self.theta is not None


@dataclass(frozen=True)
class AnchorSet:
    indices: tuple
    anchors: tuple
    gram: np.ndarray
    diagonal: bool
    attainment: tuple
    dual_norm_brackets: tuple

    @property
    def diag(self):
        return np.diag(self.gram).copy()

    @property
    def anchor_norm_upper(self):
        return np.array([b[1] for b in self.dual_norm_brackets])


@dataclass(frozen=True)
class KernelExpansion:
    """``f(x) = sum_i beta_i k_c(x, theta_i)``."""

    terms: tuple
    ctx: KernelContext
    component_index: int = 0

    @property
    def coefficients(self):
        return np.array([b for b, _ in self.terms])

    @property
    def anchors(self):
        return [t for _, t in self.terms]

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.terms:
            return np.zeros(X.shape[0])
        flat = np.stack([pack(t) for t in self.anchors])
        K = kernel_batch(self.ctx, flat, X)[:, :, self.component_index]
        beta = self.coefficients
        out = beta[0] * K[0]
        for j in range(1, beta.shape[0]):
            out = out + beta[j] * K[j]
        return out


@dataclass(frozen=True)
class MNISolution:
    expansion: KernelExpansion
    norm_lower: float
    norm_upper: float
    status: str
    witness_sign: Optional[tuple] = None

    @property
    def certified(self):
        return self.status == CERTIFIED_MINIMAL


def evaluate(expansion: KernelExpansion, x) -> np.ndarray:
    """The learned function at one input, as a length-1 vector."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return expansion.predict(x)


def _template_candidates(ctx, x, component):
    """Norm-attaining selector chains for ``x``: dominant coordinates, then the bias chain."""
    C = input_bound(ctx, x)
    out = []
    for c in range(x.shape[0]):
        if x[c] != 0 and abs(x[c]) == C:
            out.append(selector_chain(ctx.arch, coord=c, sign=1.0 if x[c] > 0 else -1.0, output=component))
    if C == 1.0:
        out.append(selector_chain(ctx.arch, coord=None, output=component))
    return out


def _polish_output_row(ctx, flat, X_others, component):
    """Project the affine output row onto the null space of the last hidden
    features at ``X_others``, so the kernel vanishes there up to rounding."""
    arch = ctx.arch
    if arch.output_activation_applied or X_others.shape[0] == 0:
        return flat
    start, w_end, _ = arch.layer_offsets()[-1]
    if arch.depth > 1:
        hidden = Architecture(arch.layer_widths[:-1], arch.activation, True)
        H = forward_batch(hidden, flat[None, :start], X_others)[0]
    else:
        H = X_others
    A = np.hstack([H, np.ones((H.shape[0], 1))])
    cols = arch.layer_shapes[-1][1]
    idx = np.r_[start + component * cols:start + (component + 1) * cols, w_end + component]
    v = flat[idx]
    out = flat.copy()
    out[idx] = v - np.linalg.pinv(A) @ (A @ v)
    return out


def _anchor_for(i, X, others, ctx, cfg, component, fallback, rho):
    x = X[i]
    C = input_bound(ctx, x) if ctx.certified else None
    for theta in _template_candidates(ctx, x, component) if C is not None else []:
        vals = kernel_batch(ctx, pack(theta)[None, :], X)[0, :, component]
        if abs(vals[i] - C) <= 1e-12 * C and all(abs(vals[j]) <= OFF_DIAGONAL_TOL for j in others):
            return AnchorResult(i, theta, "template")
    if not fallback:
        return AnchorResult(i, None, None, "no selector template vanishes at the other points")

    others = list(others)
    Xi = np.vstack([X[i:i + 1], X[others]]) if others else X[i:i + 1]

    def objective(flat, norms=None):
        K = kernel_batch(ctx, flat, Xi, norms)[:, :, component]
        penalty = np.zeros(K.shape[0])
        for j in range(1, K.shape[1]):
            penalty = penalty + np.abs(K[:, j])
        return K[:, 0] - rho * penalty

    seeds = structured_seeds(ctx, component)
    start_val = float(np.max(objective(seeds)))
    radius = tail_radius(ctx, C, start_val, cfg.tail_margin) if C is not None and start_val > 0 else 10.0
    flat, _ = maximize(objective, ctx, cfg, seeds, radius, seed_key=(_ANCHOR_KEY << 16) + i)
    for cand in (flat, _polish_output_row(ctx, flat, X[others], component)):
        vals = kernel_batch(ctx, cand[None, :], X)[0, :, component]
        if vals[i] >= MIN_ANCHOR_VALUE and all(abs(vals[j]) <= OFF_DIAGONAL_TOL for j in others):
            return AnchorResult(i, unpack(ctx.arch, cand), "search")
    return AnchorResult(
        i, None, None,
        f"no parameter found with k(x_{i}, theta) >= {MIN_ANCHOR_VALUE:g} vanishing at the other points "
        f"(best: own value {vals[i]:.3g}, max off-diagonal "
        f"{max((abs(vals[j]) for j in others), default=0.0):.3g})",
    )


def find_anchors(X, ctx: KernelContext, cfg: Optional[SearchConfig] = None, component=0,
                 fallback=True, rho=1e3, n_jobs=1):
    """One anchor attempt per point, each required to vanish at every other point."""
    cfg = cfg or SearchConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = X.shape[0] if X.size else 0

    def one(i):
        return _anchor_for(i, X, [j for j in range(m) if j != i], ctx, cfg, component, fallback, rho)

    if n_jobs > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(one, range(m)))
    return [one(i) for i in range(m)]


def extract_nice_subset(X, report, ctx: KernelContext, cfg: Optional[SearchConfig] = None,
                        component=0, fallback=True, rho=1e3, reanchor=False):
    """Greedy, in input order, largest subset with a diagonal anchor Gram matrix.

    A point is kept when its anchor vanishes at every kept point and every
    kept anchor vanishes at it.  With ``reanchor``, a point whose anchor
    failed against the full dataset is retried against the kept points only.
    Returns ``(kept_indices, anchors, excluded)``, ``excluded`` holding
    ``(index, reason)`` pairs.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    kept, anchors, excluded = [], [], []
    for res in report:
        i = res.index
        theta = res.theta
        if theta is None and reanchor:
            retry = _anchor_for(i, X, kept, ctx, cfg or SearchConfig(), component, fallback, rho)
            theta = retry.theta
            if theta is None:
                excluded.append((i, retry.reason))
                continue
        if theta is None:
            excluded.append((i, res.reason or "anchor search failed"))
            continue
        own = kernel_batch(ctx, pack(theta)[None, :], X)[0, :, component]
        bad = [j for j in kept if abs(own[j]) > OFF_DIAGONAL_TOL]
        if not bad and kept:
            flat = np.stack([pack(t) for t in anchors])
            back = kernel_batch(ctx, flat, X[i:i + 1])[:, 0, component]
            bad = [kept[r] for r in np.flatnonzero(np.abs(back) > OFF_DIAGONAL_TOL)]
        if bad:
            excluded.append((i, f"off-diagonal Gram entries with kept points {bad} exceed {OFF_DIAGONAL_TOL:g}"))
            continue
        kept.append(i)
        anchors.append(theta)
    return kept, anchors, excluded


def build_anchor_set(X, indices, anchors, ctx: KernelContext, component=0) -> AnchorSet:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xk = X[list(indices)] if len(indices) else np.zeros((0, ctx.arch.input_dim))
    M = gram_matrix(ctx, Xk, anchors, component) if len(indices) else np.zeros((0, 0))
    off = M - np.diag(np.diag(M))
    diagonal = bool(np.all(np.abs(off) <= OFF_DIAGONAL_TOL))
    brackets, attained = [], []
    for j, theta in enumerate(anchors):
        if ctx.certified:
            probes = [Combination(((1.0 / input_bound(ctx, x), x),), ctx, component) for x in Xk]
            b = dual_point_norm(ctx, theta, probes)
        else:
            b = (0.0, 1.0)
        brackets.append((float(b[0]), float(b[1])))
        ratio = abs(M[j, j]) / input_bound(ctx, Xk[j]) if ctx.certified else 0.0
        attained.append(bool(ctx.certified and b[0] >= b[1] - 1e-12 and ratio >= b[1] - 1e-12))
    return AnchorSet(tuple(indices), tuple(anchors), M, diagonal, tuple(attained), tuple(brackets))


def solve_coefficients(M, y) -> np.ndarray:
    """Solve ``M beta = y``; exact division when ``M`` is diagonal."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if M.size == 0:
        return np.zeros(0)
    if M.shape[0] != M.shape[1] or M.shape[0] != y.shape[0]:
        raise ValueError(f"Gram matrix {M.shape} does not match {y.shape[0]} targets")
    cond = float(np.linalg.cond(M)) if np.all(np.isfinite(M)) else float("inf")
    if not cond < CONDITION_LIMIT:
        raise IllConditionedError(f"Gram matrix is singular or ill-conditioned (condition {cond:.3g})", cond)
    if np.count_nonzero(M - np.diag(np.diag(M))) == 0:
        return y / np.diag(M)
    return np.linalg.solve(M, y)


def orientation_sign(beta, diag):
    """``sign(beta_i) * sign(M_ii)``: the sign vector whose combination attains the norm."""
    return tuple(int(v) for v in np.sign(beta) * np.sign(diag))


def assemble_mni(anchor_set: AnchorSet, beta, X, y, ctx: KernelContext, cfg=None, table=None,
                 component=0, scaled_witnesses=True) -> MNISolution:
    """Build the expansion and bracket its norm.

    Upper: ``sum |beta_i| ||k(., theta_i)||``.  Lower: the largest
    ``|sum_j s_j w_j y_j|`` over certified-admissible ``s`` (``w_j`` the
    witness scaling), valid because each such combination lies in the unit
    ball and the expansion interpolates ``y``.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    expansion = KernelExpansion(tuple(zip(beta.tolist(), anchor_set.anchors)), ctx, component)
    m = beta.shape[0]
    if m == 0:
        return MNISolution(expansion, 0.0, 0.0, CERTIFIED_MINIMAL, ())
    upper = float(np.sum(np.abs(beta) * anchor_set.anchor_norm_upper))
    w = witness_weights(X, ctx, scaled_witnesses) if ctx.certified else np.ones(m)

    s_beta = orientation_sign(beta, anchor_set.diag)
    if table is not None:
        admissible = admissible_set(table)
        beta_ok = s_beta in set(admissible)
    else:
        unit = [tuple(int(k == i) * sg for k in range(m)) for i in range(m) for sg in (1, -1)]
        admissible = [s for s in unit if is_admissible(s, X, ctx, cfg, component, scaled_witnesses).admissible]
        beta_ok = is_admissible(s_beta, X, ctx, cfg, component, scaled_witnesses).admissible
        if beta_ok:
            admissible.append(s_beta)
    lower = max((abs(float(np.dot(np.asarray(s) * w, y))) for s in admissible), default=0.0)
    lower = min(lower, upper)

    certified = beta_ok and anchor_set.diagonal and all(anchor_set.attainment)
    if certified and upper - lower <= CERTIFICATION_TOL:
        return MNISolution(expansion, lower, upper, CERTIFIED_MINIMAL, s_beta)
    return MNISolution(expansion, lower, upper, CANDIDATE, None)


@dataclass(frozen=True)
class VerificationReport:
    unit_ball: tuple
    norm_attained: tuple
    interpolation: tuple
    pairing: float

    @property
    def passed(self):
        return self.unit_ball[0] and self.norm_attained[0] and self.interpolation[0]


def verify_representer(expansion: KernelExpansion, alpha, X, y, ctx: KernelContext,
                       cfg: Optional[SearchConfig] = None, tol=CERTIFICATION_TOL) -> VerificationReport:
    """Check the three conditions under which ``expansion`` is a minimal-norm interpolant.

    ``unit_ball``: ``||sum alpha_i k(x_i, .)|| <= 1``.  ``norm_attained``:
    ``alpha M beta`` reaches the norm upper bound ``sum |beta_j|``.
    ``interpolation``: ``M beta = y``.  Each entry is ``(passed, value)``.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if not (alpha.shape[0] == X.shape[0] == y.shape[0]):
        raise ValueError("alpha, inputs and targets must have equal length")
    beta = expansion.coefficients
    M = gram_matrix(ctx, X, expansion.anchors, expansion.component_index)
    Mb = M @ beta if beta.size else np.zeros(X.shape[0])

    if np.any(alpha):
        est = estimate_sup(Combination.from_arrays(alpha, X, ctx, expansion.component_index), cfg)
        sup_upper = est.upper
    else:
        sup_upper = 0.0
    pairing = float(alpha @ Mb)
    norm_upper = float(np.sum(np.abs(beta)))
    residual = float(np.max(np.abs(Mb - y))) if y.size else 0.0
    return VerificationReport(
        (sup_upper <= 1.0 + tol, sup_upper),
        (pairing >= norm_upper - tol, norm_upper - pairing),
        (residual <= INTERPOLATION_TOL, residual),
        pairing,
    )


@dataclass(frozen=True)
class SolverOptions:
    lambda0: Optional[float] = None
    include_uncertified_signs: bool = False
    scaled_witnesses: bool = True
    anchor_fallback: bool = True
    reanchor: bool = False
    rho: float = 1e3
    enumeration_cap: int = DEFAULT_CAP
    n_jobs: int = 1


@dataclass(frozen=True)
class ComponentSolution:
    """Everything produced for one scalar output component."""

    component: int
    anchor_report: tuple
    kept: tuple
    excluded: tuple
    anchor_set: AnchorSet
    beta: np.ndarray
    mni: MNISolution
    admissible_table: tuple
    sweep: tuple = ()
    r_interval: Optional[tuple] = None
    selection: Optional[object] = None
    chosen: Optional[KernelExpansion] = None


def solve_scalar(X, y, ctx: KernelContext, cfg: Optional[SearchConfig] = None,
                 options: Optional[SolverOptions] = None, component=0) -> ComponentSolution:
    """Run anchors, nice subset, coefficients, admissible set, sweep and selection."""
    from .regularizer import REGULARIZED

    cfg = cfg or SearchConfig()
    options = options or SolverOptions()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if ctx.arch.output_dim != 1:
        raise ValueError("solve_scalar needs a single-output architecture; use solve_vector_valued")

    report = find_anchors(X, ctx, cfg, 0, options.anchor_fallback, options.rho, options.n_jobs)
    kept, anchors, excluded = extract_nice_subset(X, report, ctx, cfg, 0, options.anchor_fallback,
                                                  options.rho, options.reanchor)
    if not kept:
        raise NoAnchorsError("no data point admits an anchor", [(i, r) for i, r in excluded])
    if excluded:
        logger.warning("excluded %d point(s) from the nice subset: %s", len(excluded), excluded)
    aset = build_anchor_set(X, kept, anchors, ctx, 0)
    Xk, yk = X[kept], y[kept]
    beta = solve_coefficients(aset.gram, yk)
    table = tuple(enumerate_admissible(Xk, ctx, cfg, 0, options.scaled_witnesses,
                                       options.enumeration_cap, options.n_jobs))
    mni = assemble_mni(aset, beta, Xk, yk, ctx, cfg, table, 0, options.scaled_witnesses)
    sol = ComponentSolution(component, tuple(report), tuple(kept), tuple(excluded), aset, beta, mni, table,
                            chosen=mni.expansion)
    if options.lambda0 is None:
        return sol
    reg = RegConfig(options.lambda0)
    admissible = admissible_set(table, options.include_uncertified_signs)
    results = tuple(sweep(admissible, beta, aset.diag, aset.anchor_norm_upper, len(kept), reg))
    interval = r_interval_unregularized(mni.norm_lower, mni.norm_upper, reg)
    selection = select(results, interval)
    chosen = mni.expansion
    if selection.decision == REGULARIZED:
        coef = selection.best.coefficients
        chosen = KernelExpansion(tuple(zip(coef, aset.anchors)), ctx, 0)
    return replace(sol, sweep=results, r_interval=interval, selection=selection, chosen=chosen)


@dataclass(frozen=True)
class VectorSolution:
    components: tuple
    norm_lower: float
    norm_upper: float
    status: str


def solve_vector_valued(X, Y, ctx: KernelContext, cfg: Optional[SearchConfig] = None,
                        options: Optional[SolverOptions] = None) -> VectorSolution:
    """Solve each output component separately on the single-output slice of the network.

    The combined norm is the sum of the component norms.
    """
    options = options or SolverOptions()
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    sctx = ctx.scalar_slice()

    def one(i):
        return solve_scalar(X, Y[:, i], sctx, cfg, options, component=i)

    if options.n_jobs > 1 and Y.shape[1] > 1:
        with ThreadPoolExecutor(max_workers=options.n_jobs) as pool:
            comps = tuple(pool.map(one, range(Y.shape[1])))
    else:
        comps = tuple(one(i) for i in range(Y.shape[1]))
    lower = float(sum(c.mni.norm_lower for c in comps))
    upper = float(sum(c.mni.norm_upper for c in comps))
    status = CERTIFIED_MINIMAL if all(c.mni.certified for c in comps) else CANDIDATE
    return VectorSolution(comps, lower, upper, status)
