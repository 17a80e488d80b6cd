from fractions import Fraction as F

import numpy as np
import pytest

from rkbsnet.regularizer import (
    AMBIGUOUS,
    REGULARIZED,
    UNREGULARIZED,
    RegConfig,
    objective,
    orthant_minimize,
    r_interval_unregularized,
    select,
    sweep,
)

ADMISSIBLE = [
    (1, -1, 0), (-1, 1, 0), (1, 0, -1), (-1, 0, 1), (0, -1, 1), (0, 1, -1),
    (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1), (0, 0, 0),
]


def exact_orthant(s, beta, lam, m=3):
    """Per-coordinate minimum in rationals with unit diagonal and unit anchor norms."""
    total = F(0)
    for si, b in zip(s, beta):
        if si == 0:
            eps = -b
        else:
            shift = lam * m / 2
            eps = max(-b, -shift) if si > 0 else min(-b, shift)
        total += eps * eps / m + lam * abs(b + eps)
    return total


def test_sweep_matches_exact_values():
    beta = (F(2), F(-3), F(1, 2))
    lam = F(1, 10)
    res = {r.s: r for r in sweep(ADMISSIBLE, [float(b) for b in beta], np.ones(3), np.ones(3), 3, RegConfig(0.1))}
    expected = {
        (1, -1, 0): F(341, 600), (-1, 1, 0): F(53, 12), (1, 0, -1): F(3931, 1200),
        (-1, 0, 1): F(5251, 1200), (0, -1, 1): F(1001, 600), (0, 1, -1): F(53, 12),
        (1, 0, 0): F(3931, 1200), (-1, 0, 0): F(53, 12), (0, 1, 0): F(53, 12),
        (0, -1, 0): F(2051, 1200), (0, 0, 1): F(5251, 1200), (0, 0, -1): F(53, 12), (0, 0, 0): F(53, 12),
    }
    for s, value in expected.items():
        assert exact_orthant(s, beta, lam) == value
        assert res[s].r_value == pytest.approx(float(value), abs=1e-9)


def test_sweep_sorted_with_tiebreak():
    out = sweep(ADMISSIBLE, [1, -0.5, 0.5], np.ones(3), np.ones(3), 3, RegConfig(1 / 3))
    assert out[0].s == (1, -1, 0)
    assert out[0].r_value == pytest.approx(5 / 12, abs=1e-12)
    assert out[0].coefficients == pytest.approx((0.5, 0, 0))
    assert [r.r_value for r in out] == sorted(r.r_value for r in out)


def grid_minimize(s, beta, d, lam, m=3):
    """Coarse-to-fine grid over the coefficient ``c = beta + eps`` restricted to the orthant."""
    lo, hi = (0.0, 10.0) if s > 0 else (-10.0, 0.0)
    f = lambda c: d * d * (c - beta) ** 2 / m + lam * np.abs(c)
    for _ in range(4):
        c = np.linspace(lo, hi, 20001)
        k = int(np.argmin(f(c)))
        step = c[1] - c[0]
        lo, hi = max(c[0], c[k] - 2 * step), min(c[-1], c[k] + 2 * step)
    c = np.linspace(lo, hi, 20001)
    k = int(np.argmin(f(c)))
    return c[k] - beta, float(f(c[k]))


def test_closed_form_against_dense_grid():
    rng = np.random.default_rng(5)
    for _ in range(100):
        beta = rng.uniform(-3, 3)
        lam = rng.uniform(0.01, 2)
        d = rng.uniform(0.5, 2)
        s = int(rng.choice([-1, 0, 1]))
        res = orthant_minimize((s,), [beta], [d], [1.0], 3, RegConfig(lam))
        if s == 0:
            assert res.epsilon[0] == -beta
            assert res.r_value == pytest.approx(d * d * beta * beta / 3, abs=1e-12)
            continue
        eps, value = grid_minimize(s, beta, d, lam)
        assert abs(res.epsilon[0] - eps) <= 1e-6
        assert abs(res.r_value - value) <= 1e-9


def test_sign_invariant_and_objective():
    res = orthant_minimize((1, 0, -1), [2, -3, 0.5], [1, 1, 1], [1, 1, 1], 3, RegConfig(0.1))
    assert res.coefficients[0] >= 0 and res.coefficients[1] == 0 and res.coefficients[2] <= 0
    assert res.r_value == objective(res.epsilon, [2, -3, 0.5], [1, 1, 1], [1, 1, 1], 3, 0.1)


def test_selection_rules():
    results = sweep([(1, -1, 0)], [2, -3, 0.5], np.ones(3), np.ones(3), 3, RegConfig(0.1))
    assert select(results, r_interval_unregularized(5, 5.5, RegConfig(0.1))).decision == UNREGULARIZED
    assert select(results, (0.6, 0.7)).decision == REGULARIZED
    rep = select(results, (0.5, 0.6))
    assert rep.decision == AMBIGUOUS and rep.ambiguous


def test_invalid_inputs():
    with pytest.raises(ValueError):
        RegConfig(0)
    with pytest.raises(ValueError):
        orthant_minimize((1,), [1], [0], [1], 1, RegConfig(1))
    with pytest.raises(ValueError):
        select([], (1, 0))
