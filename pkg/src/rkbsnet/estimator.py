"""scikit-learn style front end for the minimal-norm interpolation solver."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .kernel import KernelContext
from .network import Architecture
from .solver import CERTIFIED_MINIMAL, SolverOptions, solve_vector_valued
from .supnorm import SearchConfig


class MinimalNormInterpolator(RegressorMixin, BaseEstimator):
    """Interpolate (or regularize) a dataset with network-kernel expansions.

    Each output column is fitted separately on a single-output network of
    shape ``(n_features, *hidden_layer_sizes, 1)``.  With ``lambda0`` set the
    orthant sweep may replace the interpolant by a regularized expansion.

    Attributes
    ----------
    solution_ : VectorSolution
        Full per-component solver output.
    expansions_ : list of KernelExpansion
        The chosen expansion for every output column.
    norm_bracket_ : tuple of float
        Bounds on the norm of the interpolant, summed over outputs.
    certified_ : bool
        Whether every component is certified minimal.
    """

    def __init__(self, hidden_layer_sizes=(2,), activation="relu", output_activation_applied=False,
                 decay_exponent=None, lambda0=None, seed=0, starts=256, iters=400, tol=1e-9,
                 include_uncertified_signs=False, scaled_witnesses=True, n_jobs=1):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.output_activation_applied = output_activation_applied
        self.decay_exponent = decay_exponent
        self.lambda0 = lambda0
        self.seed = seed
        self.starts = starts
        self.iters = iters
        self.tol = tol
        self.include_uncertified_signs = include_uncertified_signs
        self.scaled_witnesses = scaled_witnesses
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
        self._y_1d = y.ndim == 1
        Y = y.reshape(-1, 1) if self._y_1d else y
        widths = (X.shape[1], *tuple(self.hidden_layer_sizes), Y.shape[1])
        arch = Architecture(widths, self.activation, self.output_activation_applied)
        ctx = KernelContext(arch, self.decay_exponent)
        cfg = SearchConfig(seed=self.seed, starts=self.starts, iters=self.iters,
                           tolerance=self.tol, n_jobs=self.n_jobs)
        opts = SolverOptions(lambda0=self.lambda0, include_uncertified_signs=self.include_uncertified_signs,
                             scaled_witnesses=self.scaled_witnesses, n_jobs=self.n_jobs)
        self.solution_ = solve_vector_valued(X, Y, ctx, cfg, opts)
        self.expansions_ = [c.chosen for c in self.solution_.components]
        self.norm_bracket_ = (self.solution_.norm_lower, self.solution_.norm_upper)
        self.certified_ = self.solution_.status == CERTIFIED_MINIMAL
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "expansions_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        out = np.column_stack([e.predict(X) for e in self.expansions_])
        return out[:, 0] if self._y_1d else out
