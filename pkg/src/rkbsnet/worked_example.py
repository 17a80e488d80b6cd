"""Built-in fixture: the three-point example on the 2-2-1 ReLU network.

Expected values are exact rationals stored as 15-significant-digit strings.
:func:`run` recomputes everything and returns one :class:`Check` per value.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F
from typing import Optional

import numpy as np

from .kernel import KernelContext, evaluation_sup_norm
from .network import Architecture, pack, unpack
from .signs import admissible_set, sign_combination
from .solver import CERTIFIED_MINIMAL, SolverOptions, solve_scalar
from .supnorm import SearchConfig

ARCH = Architecture((2, 2, 1))
X = np.array([[1.0, -1.0], [-1.0, 0.0], [0.0, 1.0]])
X_SCALED = np.array([[2.0, -2.0], [-1.0, 0.0], [0.0, 1.0]])

# anchors reading x1, -x1, x2 into the output
ANCHORS = ((1, 0, 0, 0, 0, 0, 1, 0, 0), (-1, 0, 0, 0, 0, 0, 1, 0, 0), (0, 1, 0, 0, 0, 0, 1, 0, 0))

# parameters exposing the three inadmissible mixed-sign vectors
WITNESSES = (
    ((-1, 1, 1), (F(-4, 15), F(2, 5), 0, 0, F(1, 3), 0, 1, 0, 0), F(4, 3)),
    ((1, -1, 1), (F(3, 10), F(1, 5), 0, 0, F(1, 2), 0, 1, 0, 0), F(11, 10)),
    ((1, 1, -1), (F(1, 5), F(-3, 10), 0, 0, F(1, 2), 0, 1, 0, 0), F(11, 10)),
)

ADMISSIBLE = frozenset({
    (0, 0, 0),
    (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
    (1, -1, 0), (-1, 1, 0), (1, 0, -1), (-1, 0, 1), (0, 1, -1), (0, -1, 1),
})

SWEEP = {
    (1, -1, 0): F(341, 600),
    (-1, 1, 0): F(53, 12),
    (1, 0, -1): F(3931, 1200),
    (-1, 0, 1): F(5251, 1200),
    (0, -1, 1): F(1001, 600),
    (0, 1, -1): F(53, 12),
    (1, 0, 0): F(3931, 1200),
    (-1, 0, 0): F(53, 12),
    (0, 1, 0): F(53, 12),
    (0, -1, 0): F(2051, 1200),
    (0, 0, 1): F(5251, 1200),
    (0, 0, -1): F(53, 12),
    (0, 0, 0): F(53, 12),
}

EXACT = 1e-12
SWEEP_TOL = 1e-9
NUMERIC_TOL = 1e-6


def q(v) -> str:
    """A rational (or float) rendered to 15 significant digits."""
    return f"{float(v):.15g}"


def _sweep_expected():
    return {f"main.sweep{list(s)}": (q(r), SWEEP_TOL) for s, r in SWEEP.items()}


def expected_table() -> dict:
    """``name -> (expected string, absolute tolerance)``; tolerance None means exact string match."""
    t = {}
    for i in range(3):
        t[f"section_norm[x{i + 1}]"] = (q(1), EXACT)
    for i in range(3):
        for j in range(3):
            t[f"main.gram[{i}][{j}]"] = (q(int(i == j)), EXACT)
        t[f"main.anchor[{i}]"] = (str(list(map(float, ANCHORS[i]))), None)
    t["admissible_set"] = (str(sorted(ADMISSIBLE)), None)
    for s, _, v in WITNESSES:
        t[f"witness{list(s)}"] = (q(v), EXACT)
    for k, v in enumerate((2, -3, F(1, 2))):
        t[f"main.beta[{k}]"] = (q(v), EXACT)
    t["main.norm_lower"] = (q(5), EXACT)
    t["main.norm_upper"] = (q(F(11, 2)), EXACT)
    t["main.r_interval.low"] = (q(F(1, 2)), EXACT)
    t["main.r_interval.high"] = (q(F(11, 20)), EXACT)
    t.update(_sweep_expected())
    t["main.decision"] = ("Unregularized", None)

    t["certified.status"] = (CERTIFIED_MINIMAL, None)
    t["certified.norm"] = (q(2), EXACT)
    t["certified.witness_sign"] = (str([-1, 0, 1]), None)

    t["regularized.norm_lower"] = (q(F(3, 2)), EXACT)
    t["regularized.norm_upper"] = (q(2), EXACT)
    t["regularized.r_interval.low"] = (q(F(1, 2)), EXACT)
    t["regularized.r_interval.high"] = (q(F(2, 3)), EXACT)
    t["regularized.decision"] = ("Regularized", None)
    t["regularized.best_sign"] = (str([1, -1, 0]), None)
    t["regularized.best_r"] = (q(F(5, 12)), SWEEP_TOL)
    for k, v in enumerate((F(1, 2), 0, 0)):
        t[f"regularized.chosen[{k}]"] = (q(v), EXACT)

    t["scaled.gram[0][0]"] = (q(2), EXACT)
    t["scaled.attains_norm"] = (str([True, True, True]), None)
    for k, v in enumerate((F(1, 2), -3, F(1, 2))):  # y = (1, -3, 1/2): first coefficient a/2
        t[f"scaled.beta[{k}]"] = (q(v), EXACT)
    return t


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    actual: str
    tol: Optional[float]
    passed: bool


def compute(cfg: Optional[SearchConfig] = None) -> dict:
    """Recompute every quantity named in :func:`expected_table`, as strings."""
    cfg = cfg or SearchConfig()
    ctx = KernelContext(ARCH)
    out = {}
    for i, x in enumerate(X):
        out[f"section_norm[x{i + 1}]"] = q(evaluation_sup_norm(ctx, x, 0, cfg).upper)

    main = solve_scalar(X, (2, -3, 0.5), ctx, cfg, SolverOptions(lambda0=0.1))
    for i in range(3):
        for j in range(3):
            out[f"main.gram[{i}][{j}]"] = q(main.anchor_set.gram[i, j])
        out[f"main.anchor[{i}]"] = str([float(v) for v in pack(main.anchor_set.anchors[i])])
    out["admissible_set"] = str(sorted(admissible_set(main.admissible_table)))
    for s, theta, _ in WITNESSES:
        comb = sign_combination(s, X, ctx)
        out[f"witness{list(s)}"] = q(abs(comb(unpack(ARCH, [float(v) for v in theta]))))
    for k, b in enumerate(main.beta):
        out[f"main.beta[{k}]"] = q(b)
    out["main.norm_lower"] = q(main.mni.norm_lower)
    out["main.norm_upper"] = q(main.mni.norm_upper)
    out["main.r_interval.low"] = q(main.r_interval[0])
    out["main.r_interval.high"] = q(main.r_interval[1])
    for r in main.sweep:
        out[f"main.sweep{list(r.s)}"] = q(r.r_value)
    out["main.decision"] = main.selection.decision

    cert = solve_scalar(X, (-1, 0, 1), ctx, cfg)
    out["certified.status"] = cert.mni.status
    out["certified.norm"] = q(cert.mni.norm_upper if cert.mni.certified else float("nan"))
    out["certified.witness_sign"] = str(list(cert.mni.witness_sign or ()))

    rem = solve_scalar(X, (1, -0.5, 0.5), ctx, cfg, SolverOptions(lambda0=1 / 3))
    out["regularized.norm_lower"] = q(rem.mni.norm_lower)
    out["regularized.norm_upper"] = q(rem.mni.norm_upper)
    out["regularized.r_interval.low"] = q(rem.r_interval[0])
    out["regularized.r_interval.high"] = q(rem.r_interval[1])
    out["regularized.decision"] = rem.selection.decision
    out["regularized.best_sign"] = str(list(rem.selection.best.s))
    out["regularized.best_r"] = q(rem.selection.best.r_value)
    for k, c in enumerate(rem.chosen.coefficients):
        out[f"regularized.chosen[{k}]"] = q(c)

    sc = solve_scalar(X_SCALED, (1, -3, 0.5), ctx, cfg)
    out["scaled.gram[0][0]"] = q(sc.anchor_set.gram[0, 0])
    out["scaled.attains_norm"] = str(list(sc.anchor_set.attainment))
    for k, b in enumerate(sc.beta):
        out[f"scaled.beta[{k}]"] = q(b)
    return out


def compare(actual: dict, expected: dict) -> list:
    checks = []
    for name, (exp, tol) in expected.items():
        act = actual.get(name, "<missing>")
        if tol is None:
            ok = act == exp
        else:
            try:
                ok = abs(float(act) - float(exp)) <= tol
            except ValueError:
                ok = False
        checks.append(Check(name, exp, act, tol, bool(ok)))
    return checks


def run(cfg: Optional[SearchConfig] = None, expected: Optional[dict] = None) -> list:
    return compare(compute(cfg), expected if expected is not None else expected_table())
