"""Brackets on ``sup_theta |g(theta)|`` for finite kernel combinations.

``g(theta) = sum_i alpha_i k(x_i, theta)``.  Lower bounds come from a
multistart compass (pattern) search over packed parameter vectors; upper
bounds come from the analytic kernel bounds.  Neither needs gradients, which
matters because ReLU kinks and the ``max(1, ||theta||**p)`` denominator make
``g`` only piecewise smooth.
"""
from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import qmc

from .kernel import (
    CertificationUnavailable,
    KernelContext,
    input_bound,
    kernel_batch,
    norm_witness,
)
from .network import (
    ParamVector,
    output_bias_selector,
    pack,
    param_norm_batch,
    selector_chain,
    unpack,
)

# Absolute slack for comparisons of analytic bounds that are exact in real
# arithmetic but computed in floating point.
FLOAT_SLACK = 8 * np.finfo(float).eps
MAX_TAIL_RADIUS = 1e6


class RejectedProbeError(ValueError):
    """A probe is not certified to lie in the unit ball."""


class Bracket(NamedTuple):
    lower: float
    upper: float


@dataclass(frozen=True, eq=False)
class Combination:
    """``g = sum_i alpha_i k_c(x_i, .)`` for a fixed output component ``c``."""

    terms: tuple
    ctx: KernelContext
    component_index: int = 0

    def __post_init__(self):
        terms = tuple((float(a), np.asarray(x, dtype=float).reshape(-1)) for a, x in self.terms)
        if not terms:
            raise ValueError("a combination needs at least one term")
        s = self.ctx.arch.input_dim
        for _, x in terms:
            if x.shape[0] != s:
                raise ValueError(f"input of dimension {x.shape[0]} in a combination over dimension {s}")
        if not 0 <= self.component_index < self.ctx.arch.output_dim:
            raise ValueError(f"component index {self.component_index} out of range")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_arrays(cls, alpha, X, ctx, component_index=0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return cls(tuple(zip(np.asarray(alpha, dtype=float).reshape(-1), X)), ctx, component_index)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([a for a, _ in self.terms])

    @property
    def inputs(self) -> np.ndarray:
        return np.stack([x for _, x in self.terms])

    def scaled(self, c) -> "Combination":
        return Combination(tuple((c * a, x) for a, x in self.terms), self.ctx, self.component_index)

    def __neg__(self):
        return self.scaled(-1.0)

    def values(self, flat_thetas, norms=None) -> np.ndarray:
        """``g`` at each row of ``flat_thetas``."""
        K = kernel_batch(self.ctx, flat_thetas, self.inputs, norms)[:, :, self.component_index]
        alpha = self.coefficients
        g = K[:, 0] * alpha[0]
        for i in range(1, alpha.shape[0]):
            g = g + K[:, i] * alpha[i]
        return g

    def __call__(self, theta: ParamVector) -> float:
        return float(self.values(pack(theta)[None, :])[0])

    def merged(self):
        """Coefficients and inputs with repeated inputs summed and zeros dropped."""
        acc = {}
        order = []
        for a, x in self.terms:
            key = x.tobytes()
            if key not in acc:
                acc[key] = [0.0, x]
                order.append(key)
            acc[key][0] += a
        out = [(acc[k][0], acc[k][1]) for k in order if acc[k][0] != 0.0]
        return out


@dataclass(frozen=True)
class SupNormEstimate:
    lower: float
    upper: float
    witness: Optional[ParamVector]
    status: str

    CERTIFIED = "CertifiedExact"
    BRACKETED = "Bracketed"

    def __post_init__(self):
        if self.lower < 0 or self.upper < self.lower:
            raise ValueError(f"inconsistent bracket [{self.lower}, {self.upper}]")

    @property
    def certified(self) -> bool:
        return self.status == self.CERTIFIED


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    starts: int = 256
    iters: int = 400
    tail_margin: float = 1e-6
    tolerance: float = 1e-9
    n_jobs: int = 1

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in ("starts", "iters", "n_jobs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.tail_margin <= 0 or self.tolerance <= 0:
            raise ValueError("tail_margin and tolerance must be positive")


def _depth2_family(ctx: KernelContext) -> bool:
    arch = ctx.arch
    return arch.depth == 2 and arch.activation == "relu" and not arch.output_activation_applied


def analytic_upper(comb: Combination) -> float:
    """Certified upper bound on ``||g||_inf``.

    The minimum of the triangle bound ``sum |alpha_i| C(x_i)`` and, for one
    hidden ReLU layer with affine output and two terms of opposite sign, the
    difference bound ``max(|a1| C(x1), |a2| C(x2), |a1 + a2|)``.
    """
    ctx = comb.ctx
    if not ctx.certified:
        raise CertificationUnavailable(
            f"decay exponent {ctx.p:g} < depth + 1 = {ctx.arch.depth + 1}: no analytic bound"
        )
    terms = comb.merged()
    if not terms:
        return 0.0
    bounds = [abs(a) * input_bound(ctx, x) for a, x in terms]
    best = float(sum(bounds))
    if _depth2_family(ctx) and len(terms) == 2 and terms[0][0] * terms[1][0] < 0:
        best = min(best, max(bounds[0], bounds[1], abs(terms[0][0] + terms[1][0])))
    return best


def tail_radius(ctx: KernelContext, total_bound: float, lower: float, margin: float) -> float:
    """Radius beyond which ``|g| <= total_bound / ||theta||**(p - l)`` drops below ``lower - margin``."""
    target = lower - margin
    if target <= 0:
        return MAX_TAIL_RADIUS
    decay = ctx.p - ctx.arch.depth
    return float(min(MAX_TAIL_RADIUS, max(1.0, (total_bound / target) ** (1.0 / decay))))


def structured_seeds(ctx: KernelContext, component: int = 0) -> np.ndarray:
    """Selector chains on every coordinate with both signs, bias chains, and constants."""
    arch = ctx.arch
    seeds = []
    coords = [None] + list(range(arch.input_dim))
    for coord in coords:
        for sign in (1.0, -1.0):
            if coord is None and sign < 0:
                continue
            flat = pack(selector_chain(arch, coord=coord, sign=sign, output=component))
            seeds.append(flat)
            out = flat.copy()
            start, b_end = arch.layer_offsets()[-1][0], arch.layer_offsets()[-1][2]
            out[start:b_end] = 0.0 - out[start:b_end]
            seeds.append(out)
    for value in (1.0, -1.0):
        seeds.append(pack(output_bias_selector(arch, component, value)))
    return np.unique(np.stack(seeds), axis=0)


def _row_groups(arch):
    groups = []
    for (rows, cols), (start, w_end, _) in zip(arch.layer_shapes, arch.layer_offsets()):
        for i in range(rows):
            groups.append([start + i * cols + j for j in range(cols)] + [w_end + i])
    return groups


def _poll_directions(arch):
    """Unit coordinate moves plus in-row transfer moves ``e_i +- e_j``.

    Transfers let the search slide along the ``||theta|| = 1`` boundary where
    any single-coordinate move changes the decay factor.
    """
    P = arch.n_params
    eye = np.eye(P)
    coord = np.concatenate([eye, -eye])
    pairs = []
    for group in _row_groups(arch):
        for i, j in itertools.combinations(group, 2):
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                d = np.zeros(P)
                d[i], d[j] = si, sj
                pairs.append(d)
    pairs = np.array(pairs).reshape(-1, P)
    return coord, pairs


def _compass_search(objective, P, x0, cfg: SearchConfig, radius, arch, pair_dirs, seed_key):
    """Maximize ``objective`` from each row of ``x0`` by compass search.

    Moves that leave the ball ``param_norm <= radius`` are rejected.  The
    poll set is shared by all starts and depends only on the iteration
    number, so every start evolves independently of its batch.
    """
    X = np.array(x0, dtype=float)
    n = X.shape[0]
    if n == 0:
        return X, np.zeros(0)
    norms = param_norm_batch(arch, X)
    F = objective(X, norms)
    step = 0.125 * np.maximum(1.0, norms)
    min_step = 1e-10
    coord = np.concatenate([np.eye(P), -np.eye(P)])
    max_pairs = 512
    for it in range(cfg.iters):
        active = np.flatnonzero(step > min_step * np.maximum(1.0, norms))
        if active.size == 0:
            break
        if len(pair_dirs) > max_pairs:
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed_key, cfg.seed, it])))
            pick = np.sort(rng.choice(len(pair_dirs), size=max_pairs, replace=False))
            dirs = np.concatenate([coord, pair_dirs[pick]])
        else:
            dirs = np.concatenate([coord, pair_dirs]) if len(pair_dirs) else coord
        Xa = X[active]
        base = Xa[:, None, :]
        cand = base + step[active, None, None] * dirs[None, :, :]
        radial = base * (1.0 + step[active, None, None] * np.array([1.0, -1.0])[None, :, None])
        cand = np.concatenate([cand, radial], axis=1)
        k = cand.shape[1]
        flat = cand.reshape(-1, P)
        cand_norms = param_norm_batch(arch, flat)
        vals = objective(flat, cand_norms).reshape(-1, k)
        vals = np.where((cand_norms <= radius).reshape(-1, k), vals, -np.inf)
        best = np.argmax(vals, axis=1)
        best_val = vals[np.arange(active.size), best]
        improved = best_val > F[active]
        idx = active[improved]
        X[idx] = cand[np.flatnonzero(improved), best[improved]]
        F[idx] = best_val[improved]
        norms[idx] = cand_norms.reshape(-1, k)[np.flatnonzero(improved), best[improved]]
        step[idx] = np.minimum(step[idx] * 2.0, np.maximum(1.0, norms[idx]))
        step[active[~improved]] *= 0.5
    return X, F


def _random_starts(arch, cfg: SearchConfig, radius, first, count, seed_key):
    """Start points ``first .. first + count - 1``; start ``i`` uses its own stream."""
    P = arch.n_params
    out = np.empty((count, P))
    for row, i in enumerate(range(first, first + count)):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed_key, cfg.seed, i])))
        d = rng.laplace(size=P)
        if rng.random() < 0.5:
            r = rng.uniform(0.25, 1.0)
        else:
            r = float(np.exp(rng.uniform(0.0, np.log(max(radius, 1.0)))))
        r = min(r, radius)
        norm = param_norm_batch(arch, d[None, :])[0]
        out[row] = d * (r / norm) if norm > 0 else d
    return out


def _chunks(total, n_jobs):
    size = max(1, -(-total // n_jobs))
    return [(a, min(total, a + size)) for a in range(0, total, size)]


def _best(X, F):
    """Largest value; exact ties go to the lexicographically smallest point."""
    top = np.max(F)
    idx = np.flatnonzero(F == top)
    order = np.lexsort(X[idx].T[::-1])
    return idx[order[0]]


_SEARCH_KEY = 0x5EA
_ANCHOR_KEY = 0xA4C


def maximize(objective, ctx: KernelContext, cfg: SearchConfig, seeds, radius, seed_key=_SEARCH_KEY):
    """Multistart compass ascent of a batched objective; returns ``(theta_flat, value)``."""
    arch = ctx.arch
    P = arch.n_params
    _, pair_dirs = _poll_directions(arch)
    seeds = np.asarray(seeds, dtype=float).reshape(-1, P)
    seeds = seeds[param_norm_batch(arch, seeds) <= radius] if len(seeds) else seeds
    total = cfg.starts

    def run(bounds):
        a, b = bounds
        starts = _random_starts(arch, cfg, radius, a, b - a, seed_key)
        return _compass_search(objective, P, starts, cfg, radius, arch, pair_dirs, seed_key)

    chunks = _chunks(total, cfg.n_jobs)
    if cfg.n_jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    if len(seeds):
        results.append(_compass_search(objective, P, seeds, cfg, radius, arch, pair_dirs, seed_key))
    X = np.concatenate([r[0] for r in results])
    F = np.concatenate([r[1] for r in results])
    i = _best(X, F)
    return X[i], float(F[i])


def estimate_sup(comb: Combination, cfg: Optional[SearchConfig] = None) -> SupNormEstimate:
    """Bracket ``||g||_inf``: search lower bound, analytic upper bound."""
    cfg = cfg or SearchConfig()
    ctx = comb.ctx
    arch = ctx.arch
    zero = ParamVector.zeros(arch)
    if not comb.merged():
        return SupNormEstimate(0.0, 0.0, zero, SupNormEstimate.CERTIFIED)

    seeds = structured_seeds(ctx, comb.component_index)
    seed_vals = np.abs(comb.values(seeds))
    lower0 = float(seed_vals.max())

    if ctx.certified:
        total = float(sum(abs(a) * input_bound(ctx, x) for a, x in comb.merged()))
        upper = analytic_upper(comb)
        radius = tail_radius(ctx, total, lower0, cfg.tail_margin)
    else:
        upper = float("inf")
        radius = MAX_TAIL_RADIUS

    if upper - lower0 <= cfg.tolerance:
        i = _best(seeds, seed_vals)
        return SupNormEstimate(min(lower0, upper), upper, unpack(arch, seeds[i]), SupNormEstimate.CERTIFIED)

    def objective(flat, norms=None):
        return np.abs(comb.values(flat, norms))

    theta, lower = maximize(objective, ctx, cfg, seeds, radius)
    lower = min(lower, upper)
    status = SupNormEstimate.CERTIFIED if upper - lower <= cfg.tolerance else SupNormEstimate.BRACKETED
    return SupNormEstimate(lower, upper, unpack(arch, theta), status)


def _l1_ball_rows(arch, U, radius):
    """Map unit-cube points to the product of per-row l1 balls of the given radii."""
    n = U.shape[0]
    out = np.zeros((n, arch.n_params))
    col = 0
    for group in _row_groups(arch):
        d = len(group)
        E = -np.log(np.clip(U[:, col:col + d + 1], 1e-300, 1.0))
        col += d + 1
        signs = np.where(U[:, col:col + d] < 0.5, -1.0, 1.0)
        col += d
        out[:, group] = signs * E[:, :d] / E.sum(axis=1, keepdims=True) * radius[:, None]
    return out


def _vertex_grid(arch, component, limit):
    """Products of per-row l1-ball vertices ``+-e_j`` at radius 1 (capped)."""
    groups = _row_groups(arch)
    choices = [[(j, s) for j in g for s in (1.0, -1.0)] for g in groups]
    out = []
    for combo in itertools.product(*choices):
        flat = np.zeros(arch.n_params)
        for j, s in combo:
            flat[j] = s
        out.append(flat)
        if len(out) >= limit:
            break
    return np.array(out).reshape(-1, arch.n_params)


def grid_oracle(comb: Combination, samples: int, seed: int = 0) -> float:
    """Brute-force lower bound on ``||g||_inf`` from a fixed point set.

    The set is the grid of l1-ball vertices (one nonzero entry per neuron
    row) plus a scrambled Sobol sample of the tail-truncated parameter ball
    with log-uniform radii in ``[1/8, R]``.  Independent of the search code.
    """
    ctx = comb.ctx
    arch = ctx.arch
    if not comb.merged():
        return 0.0
    n_grid = max(1, samples // 4)
    grid = _vertex_grid(arch, comb.component_index, n_grid)
    best = float(np.max(np.abs(comb.values(grid)))) if len(grid) else 0.0
    if ctx.certified:
        total = float(sum(abs(a) * input_bound(ctx, x) for a, x in comb.merged()))
        R = tail_radius(ctx, total, best, 1e-6)
    else:
        R = 1.0
    n_sobol = max(0, samples - len(grid))
    if n_sobol:
        dims = 1 + sum(2 * len(g) + 1 for g in _row_groups(arch))
        sampler = qmc.Sobol(dims, scramble=True, seed=seed)
        batch = 1 << 14
        done = 0
        while done < n_sobol:
            k = min(batch, n_sobol - done)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                U = sampler.random(k)
            lo, hi = np.log(0.125), np.log(max(R, 0.125))
            radius = np.exp(lo + U[:, 0] * (hi - lo))
            pts = _l1_ball_rows(arch, U[:, 1:], radius)
            best = max(best, float(np.max(np.abs(comb.values(pts)))))
            done += k
    return best


def dual_point_norm(ctx: KernelContext, theta: ParamVector, probes) -> Bracket:
    """Bracket the norm of ``k(., theta)`` as a functional on the sup-norm closure.

    Point evaluation has norm at most 1; every probe certified to lie in the
    unit ball contributes ``|g(theta)|`` to the lower bound.
    """
    lower = 0.0
    for probe in probes:
        bound = analytic_upper(probe)
        if bound > 1.0 + FLOAT_SLACK:
            raise RejectedProbeError(f"probe has certified norm bound {bound:g} > 1")
        lower = max(lower, abs(probe(theta)))
    return Bracket(min(lower, 1.0), 1.0)


__all__ = [
    "Bracket",
    "Combination",
    "RejectedProbeError",
    "SearchConfig",
    "SupNormEstimate",
    "analytic_upper",
    "dual_point_norm",
    "estimate_sup",
    "grid_oracle",
    "maximize",
    "norm_witness",
    "structured_seeds",
    "tail_radius",
]
