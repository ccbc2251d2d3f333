"""scikit-learn style wrappers around the lattice diagnostics and power-law fits."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .ensemble import VelocityField
from .harness import power_law_fit
from .lattice import enumerate_lattice
from .transfer import stretch_diagnostics, triad_table


class OrbitStretchTransformer(TransformerMixin, BaseEstimator):
    """Map velocity fields on a fixed lattice to ``(rho_v, rho_abs_v, inf_norm_v, nu_c_star)``.

    ``fit`` builds the lattice and its triad table; ``X`` is ignored there. ``transform``
    takes complex coefficients of shape ``(n_samples, n_modes, 3)`` or
    ``(n_samples, 3 * n_modes)`` in lattice mode order.
    """

    def __init__(self, N: int = 2, truncation: str = "cube", nonlinearity: str = "gradient", method: str = "jacobi"):
        self.N = N
        self.truncation = truncation
        self.nonlinearity = nonlinearity
        self.method = method

    def fit(self, X=None, y=None):
        self.index_ = enumerate_lattice(self.N, self.truncation)
        triad_table(self.index_)
        self.n_modes_ = self.index_.n_modes
        return self

    def transform(self, X):
        check_is_fitted(self, "index_")
        X = np.asarray(X, dtype=np.complex128)
        X = X.reshape(X.shape[0], self.n_modes_, 3)
        out = np.empty((X.shape[0], 4))
        for i, coeffs in enumerate(X):
            d = stretch_diagnostics(VelocityField(self.index_, coeffs), self.method, self.nonlinearity)
            out[i] = d.rho_v, d.rho_abs_v, d.inf_norm_v, d.nu_c_star
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["rho_v", "rho_abs_v", "inf_norm_v", "nu_c_star"], dtype=object)


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """``y ~ prefactor * N**exponent`` by least squares in log-log coordinates."""

    def fit(self, X, y):
        N = np.asarray(X, dtype=np.float64).reshape(-1)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if N.shape != y.shape:
            raise ValueError("X and y must have the same number of samples")
        fit = power_law_fit(zip(N, y))
        self.exponent_ = fit.exponent
        self.prefactor_ = fit.prefactor
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        N = np.asarray(X, dtype=np.float64).reshape(-1)
        return self.prefactor_ * N ** self.exponent_
