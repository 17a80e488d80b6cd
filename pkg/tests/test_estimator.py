import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rkbsnet import MinimalNormInterpolator

X = np.array([[1.0, -1.0], [-1.0, 0.0], [0.0, 1.0]])


def test_fit_predict_interpolates():
    est = MinimalNormInterpolator().fit(X, [2, -3, 0.5])
    np.testing.assert_allclose(est.predict(X), [2, -3, 0.5])
    assert est.norm_bracket_ == (5.0, 5.5) and not est.certified_
    assert est.score(X, [2, -3, 0.5]) == 1.0


def test_regularized_prediction():
    est = MinimalNormInterpolator(lambda0=1 / 3).fit(X, [1, -0.5, 0.5])
    np.testing.assert_allclose(est.predict(X), [0.5, 0, 0], atol=1e-15)


def test_multi_output_shape():
    est = MinimalNormInterpolator(starts=16, iters=80).fit(X, np.column_stack([[-1, 0, 1], [2, -3, 0.5]]))
    assert est.predict(X).shape == (3, 2)
    assert est.norm_bracket_ == (7.0, 7.5)


def test_params_and_clone():
    est = MinimalNormInterpolator(lambda0=0.1, seed=3)
    assert est.get_params()["lambda0"] == 0.1
    assert clone(est).get_params() == est.get_params()
    est.set_params(starts=8)
    assert est.starts == 8


def test_validation():
    with pytest.raises(NotFittedError):
        MinimalNormInterpolator().predict(X)
    with pytest.raises(ValueError):
        MinimalNormInterpolator().fit(X, [1, 2])
    est = MinimalNormInterpolator().fit(X, [-1, 0, 1])
    with pytest.raises(ValueError):
        est.predict(np.zeros((2, 3)))
