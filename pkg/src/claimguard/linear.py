"""Logistic regression fit by full-batch gradient descent.

Deterministic by construction: weights and bias start at zero and every
epoch applies one gradient step of the L2-regularized binary
cross-entropy (the bias is not regularized). Exposed as an
sklearn-style estimator plus standalone loss/gradient functions so the
analytic gradient can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .errors import InvalidHyperparameter
from .metrics import classify
from .validation import as_binary_vector, as_float_matrix, check_n_features


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean binary cross-entropy + (l2/2)*||w||^2, computed through
    log(1+e^z) for numerical stability."""
    z = X @ weights + bias
    per_row = np.logaddexp(0.0, z) - y * z
    return float(per_row.mean() + 0.5 * l2 * np.dot(weights, weights))


def bce_gradient(
    weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    residual = sigmoid(X @ weights + bias) - y
    grad_w = X.T @ residual / X.shape[0] + l2 * weights
    grad_b = float(residual.mean())
    return grad_w, grad_b


class LogisticRegressionGD(BaseEstimator, ClassifierMixin):
    """Binary logistic regression, positive class = fraud = 1.

    Parameters
    ----------
    epochs : gradient steps to take (0 leaves the zero-initialized model).
    learning_rate : step size.
    l2 : ridge penalty on the weights.
    threshold : decision cut for predict (score >= threshold -> 1).
    """

    def __init__(self, epochs: int = 300, learning_rate: float = 0.1,
                 l2: float = 1e-4, threshold: float = 0.5):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.l2 = l2
        self.threshold = threshold

    def _check_hyperparameters(self) -> None:
        if self.epochs < 0:
            raise InvalidHyperparameter("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise InvalidHyperparameter("learning_rate must be positive")
        if self.l2 < 0:
            raise InvalidHyperparameter("l2 must be >= 0")

    def fit(self, X, y, feature_names: list[str] | None = None):
        self._check_hyperparameters()
        X = as_float_matrix(X)
        y = as_binary_vector(y, n_rows=X.shape[0]).astype(np.float64)
        w = np.zeros(X.shape[1], dtype=np.float64)
        b = 0.0
        log: list[float] = []
        for _ in range(self.epochs):
            log.append(bce_loss(w, b, X, y, self.l2))
            grad_w, grad_b = bce_gradient(w, b, X, y, self.l2)
            w -= self.learning_rate * grad_w
            b -= self.learning_rate * grad_b
        self.weights_ = w
        self.bias_ = b
        self.training_log_ = log  # loss at the start of each epoch
        self.n_features_in_ = X.shape[1]
        self.feature_names_ = list(feature_names) if feature_names else None
        return self

    def _require_fitted(self) -> None:
        if not hasattr(self, "weights_"):
            raise NotFittedError("fit must be called before scoring")

    def decision_function(self, X) -> np.ndarray:
        self._require_fitted()
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        return X @ self.weights_ + self.bias_

    def predict_proba(self, X) -> np.ndarray:
        """Per-row probability of the positive class, shape (n,)."""
        return sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return classify(self.predict_proba(X), self.threshold)

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "weights": [float(v) for v in self.weights_],
            "bias": float(self.bias_),
            "hyperparameters": {
                "epochs": self.epochs,
                "learning_rate": self.learning_rate,
                "l2": self.l2,
                "threshold": self.threshold,
            },
            "feature_names": self.feature_names_,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LogisticRegressionGD":
        hp = payload["hyperparameters"]
        model = cls(
            epochs=hp["epochs"],
            learning_rate=hp["learning_rate"],
            l2=hp["l2"],
            threshold=hp["threshold"],
        )
        model.weights_ = np.asarray(payload["weights"], dtype=np.float64)
        model.bias_ = float(payload["bias"])
        model.training_log_ = []
        model.n_features_in_ = model.weights_.shape[0]
        model.feature_names_ = payload.get("feature_names")
        return model
