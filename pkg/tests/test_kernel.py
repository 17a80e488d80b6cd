import numpy as np
import pytest

from rkbsnet.kernel import (
    CertificationUnavailable,
    KernelContext,
    evaluation_sup_norm,
    gram_matrix,
    input_bound,
    kernel_batch,
    kernel_eval,
    norm_witness,
)
from rkbsnet.network import Architecture, selector_chain, unpack


def test_default_decay_exponent():
    assert KernelContext(Architecture((2, 2, 1))).p == 3
    assert KernelContext(Architecture((2, 3, 3, 1))).p == 4


def test_kernel_applies_decay():
    ctx = KernelContext(Architecture((1, 1, 1)))
    theta = unpack(ctx.arch, [2.0, 0.0, 1.0, 0.0])  # norm 2
    assert kernel_eval(ctx, [1.0], theta)[0] == pytest.approx(2.0 / 8.0)


def test_kernel_bound_on_random_pairs():
    rng = np.random.default_rng(3)
    for widths in [(2, 2, 1), (3, 4, 2), (2, 3, 3, 1)]:
        ctx = KernelContext(Architecture(widths))
        n = 10_000 // 3 + 1
        T = rng.normal(size=(n, ctx.arch.n_params))
        scale = 10 ** rng.uniform(-2, 3, size=n)
        T = T / np.abs(T).sum(axis=1, keepdims=True) * scale[:, None] * 2
        X = rng.normal(size=(8, widths[0])) * rng.choice([0.1, 1, 20], size=(8, 1))
        K = np.abs(kernel_batch(ctx, T, X))
        bound = np.array([input_bound(ctx, x) for x in X])
        assert np.all(K <= bound[None, :, None] * (1 + 1e-12))


def test_section_norms_of_worked_example(ctx, X3):
    for x in X3:
        est = evaluation_sup_norm(ctx, x)
        assert est.certified and est.lower == 1.0 and est.upper == 1.0


def test_section_norm_scales_with_input(ctx):
    est = evaluation_sup_norm(ctx, [2.0, -2.0])
    assert est.upper == 2.0 and est.certified
    assert kernel_eval(ctx, [2.0, -2.0], est.witness)[0] == 2.0


def test_norm_witness_for_small_inputs_uses_bias(ctx):
    theta = norm_witness(ctx, [0.3, -0.2])
    assert kernel_eval(ctx, [0.3, -0.2], theta)[0] == 1.0


def test_gram_identity(ctx, X3):
    anchors = [selector_chain(ctx.arch, 0), selector_chain(ctx.arch, 0, -1.0), selector_chain(ctx.arch, 1)]
    np.testing.assert_array_equal(gram_matrix(ctx, X3, anchors), np.eye(3))


def test_uncertified_exponent(fast):
    ctx = KernelContext(Architecture((1, 1, 1)), decay_exponent=1.5)
    assert not ctx.certified
    with pytest.raises(CertificationUnavailable):
        input_bound(ctx, [1.0])
    est = evaluation_sup_norm(ctx, [1.0], cfg=fast)
    assert est.upper == float("inf") and not est.certified and est.lower > 0


def test_rejects_nonpositive_exponent():
    with pytest.raises(ValueError):
        KernelContext(Architecture((1, 1)), decay_exponent=0)
