"""Principal component analysis on standardized columns.

Columns are centred and scaled by their population standard deviation
(constant columns scale by 1), then the covariance (1/n convention) is
eigendecomposed through numpy's SVD. Components follow a fixed sign
convention - the entry of largest magnitude is made positive - so the
decomposition is reproducible. When the requested component count
exceeds the numerical rank (eigenvalue below rank_tol), the surplus
components are zero rows, flagged in padded_, and a RankDeficientWarning
is emitted.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import InvalidHyperparameter, KTooLarge, RankDeficientWarning
from .validation import as_float_matrix, check_n_features


class StandardizedPCA(BaseEstimator, TransformerMixin):
    def __init__(self, n_components: int, rank_tol: float = 1e-12):
        self.n_components = n_components
        self.rank_tol = rank_tol

    def fit(self, X, y=None, feature_names: list[str] | None = None):
        if self.n_components < 1:
            raise InvalidHyperparameter("n_components must be >= 1")
        X = as_float_matrix(X)
        n, d = X.shape
        if n < 2:
            raise InvalidHyperparameter("PCA needs at least two rows")
        limit = min(n - 1, d)
        if self.n_components > limit:
            raise KTooLarge(self.n_components, limit)

        means = X.mean(axis=0)
        stds = X.std(axis=0)
        stds = np.where(stds == 0.0, 1.0, stds)
        Z = (X - means) / stds

        _, singular, vt = np.linalg.svd(Z, full_matrices=False)
        eigenvalues = singular**2 / n  # covariance eigenvalues, 1/n convention
        total_variance = float(np.sum(eigenvalues))

        k = self.n_components
        components = np.zeros((k, d), dtype=np.float64)
        explained = np.zeros(k, dtype=np.float64)
        padded = np.zeros(k, dtype=bool)
        for i in range(k):
            if i < eigenvalues.shape[0] and eigenvalues[i] >= self.rank_tol:
                row = vt[i].copy()
                anchor = int(np.argmax(np.abs(row)))
                if row[anchor] < 0:
                    row = -row
                components[i] = row
                explained[i] = eigenvalues[i]
            else:
                padded[i] = True
        if padded.any():
            warnings.warn(
                f"kept {int(padded.sum())} zero components beyond numerical rank",
                RankDeficientWarning,
            )

        self.column_means_ = means
        self.column_stds_ = stds
        self.components_ = components
        self.explained_variance_ = explained
        self.total_variance_ = total_variance
        self.explained_variance_ratio_ = (
            explained / total_variance if total_variance > 0 else np.zeros(k)
        )
        self.padded_ = padded
        self.n_features_in_ = d
        self.feature_names_ = list(feature_names) if feature_names else None
        return self

    def _require_fitted(self) -> None:
        if not hasattr(self, "components_"):
            raise NotFittedError("fit must be called before transform")

    def transform(self, X) -> np.ndarray:
        self._require_fitted()
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        Z = (X - self.column_means_) / self.column_stds_
        return Z @ self.components_.T

    def inverse_transform(self, scores) -> np.ndarray:
        self._require_fitted()
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim != 2 or scores.shape[1] != self.components_.shape[0]:
            raise InvalidHyperparameter(
                f"scores must have shape (n, {self.components_.shape[0]})"
            )
        return scores @ self.components_ * self.column_stds_ + self.column_means_

    def reconstruction_residuals(self, X) -> np.ndarray:
        """Residual matrix in standardized space: Z - Z C^T C."""
        self._require_fitted()
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        Z = (X - self.column_means_) / self.column_stds_
        return Z - (Z @ self.components_.T) @ self.components_

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "n_components": self.n_components,
            "rank_tol": self.rank_tol,
            "column_means": self.column_means_.tolist(),
            "column_stds": self.column_stds_.tolist(),
            "components": self.components_.tolist(),
            "explained_variance": self.explained_variance_.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio_.tolist(),
            "total_variance": self.total_variance_,
            "padded": [bool(p) for p in self.padded_],
            "feature_names": self.feature_names_,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "StandardizedPCA":
        model = cls(n_components=payload["n_components"], rank_tol=payload["rank_tol"])
        model.column_means_ = np.asarray(payload["column_means"])
        model.column_stds_ = np.asarray(payload["column_stds"])
        model.components_ = np.asarray(payload["components"])
        model.explained_variance_ = np.asarray(payload["explained_variance"])
        model.explained_variance_ratio_ = np.asarray(payload["explained_variance_ratio"])
        model.total_variance_ = float(payload["total_variance"])
        model.padded_ = np.asarray(payload["padded"], dtype=bool)
        model.n_features_in_ = model.components_.shape[1]
        model.feature_names_ = payload.get("feature_names")
        return model
