"""scikit-learn adapter: equilibrium points in, curvature features out."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .equilibrium import curvature
from .errors import DegenerateMetricError, DomainError
from .phase import MetricSpec
from .systems import load_system


class CurvatureTransformer(TransformerMixin, BaseEstimator):
    """Map rows of extensive variables to ``(scalar_R, det_g, D)``.

    Points where the metric degenerates or that fall outside the domain give
    NaN rows unless ``errors="raise"``.  ``D`` is NaN for systems without a
    singularity indicator.
    """

    def __init__(self, system="ideal", family="ginv2", k=-1, lam="-1", xi="delta", chi="delta", errors="nan"):
        self.system = system
        self.family = family
        self.k = k
        self.lam = lam
        self.xi = xi
        self.chi = chi
        self.errors = errors

    def fit(self, X, y=None):
        X = check_array(X)
        self.system_ = load_system(self.system)
        if X.shape[1] != self.system_.n:
            raise ValueError(f"expected {self.system_.n} columns, got {X.shape[1]}")
        self.spec_ = MetricSpec.from_config(
            {"family": self.family, "k": str(self.k), "lambda": str(self.lam), "xi": self.xi, "chi": self.chi}
        )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        out = np.full((len(X), 3), np.nan)
        for i, E in enumerate(X):
            try:
                rep = curvature(self.system_, self.spec_, E)
            except (DomainError, DegenerateMetricError):
                if self.errors == "raise":
                    raise
                continue
            out[i] = rep.scalar_R, rep.det_g, np.nan if rep.D is None else rep.D
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["scalar_R", "det_g", "D"], dtype=object)
