"""Dense reconstruction autoencoder for anomaly scoring.

The network is a plain multilayer perceptron shaped
[d, h1, bottleneck, h2, d]: ReLU hidden layers (switchable to linear for
diagnostics), a linear output, inverted dropout on hidden activations
during training only, and minibatch SGD with momentum minimizing the
mean squared reconstruction error. It trains exclusively on non-fraud
rows; rows are claims or providers that the upstream pipeline has
already standardized.

Scoring: per attribute the absolute reconstruction gap |xhat - x|, per
row the mean squared gap across attributes. A decision threshold is the
nearest-rank percentile of non-fraud row errors, and a row is flagged
when its error exceeds the threshold strictly.

Training canonicalizes row order (lexicographic sort) before the first
epoch, so batch composition depends only on the seed and the data as a
multiset - reordering the input rows cannot change the fit.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import (
    EmptyErrors,
    FraudRowsPresent,
    InvalidHyperparameter,
    NonFiniteLoss,
    PercentileOutOfRange,
)
from .validation import as_binary_vector, as_float_matrix, check_n_features


def default_layer_sizes(d: int) -> list[int]:
    return [d, math.ceil(d / 2), math.ceil(d / 4), math.ceil(d / 2), d]


@dataclass
class NetworkConfig:
    layer_sizes: list[int]
    dropout_rate: float = 0.2
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.001
    momentum: float = 0.9
    hidden_activation: str = "relu"  # or "linear"
    seed: int = 0

    def validate(self) -> None:
        sizes = self.layer_sizes
        if len(sizes) < 3:
            raise InvalidHyperparameter("need input, bottleneck, and output layers")
        if any(s < 1 for s in sizes):
            raise InvalidHyperparameter("layer sizes must be positive")
        if sizes[0] != sizes[-1]:
            raise InvalidHyperparameter("first and last layer sizes must both equal d")
        # Compressive by design; equality is allowed so a linear network
        # can represent the identity in diagnostics.
        if min(sizes[1:-1]) > sizes[0]:
            raise InvalidHyperparameter("bottleneck must not exceed the feature count")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidHyperparameter("dropout_rate must lie in [0, 1)")
        if self.epochs < 0:
            raise InvalidHyperparameter("epochs must be >= 0")
        if self.batch_size < 1:
            raise InvalidHyperparameter("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidHyperparameter("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidHyperparameter("momentum must lie in [0, 1)")
        if self.hidden_activation not in ("relu", "linear"):
            raise InvalidHyperparameter("hidden_activation must be 'relu' or 'linear'")


# --- network core -----------------------------------------------------------


def init_parameters(layer_sizes: list[int], rng: np.random.Generator) -> list[dict]:
    """Glorot-uniform weights, zero biases, drawn layer by layer."""
    params = []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        params.append(
            {
                "W": rng.uniform(-limit, limit, size=(fan_in, fan_out)),
                "b": np.zeros(fan_out, dtype=np.float64),
            }
        )
    return params


def apply_dropout(rng: np.random.Generator, activations: np.ndarray, rate: float) -> np.ndarray:
    """Inverted dropout: zero each unit with probability `rate`, scale
    the survivors by 1/(1-rate) so the expectation matches inference."""
    if rate == 0.0:
        return activations
    mask = (rng.random(activations.shape) >= rate) / (1.0 - rate)
    return activations * mask


def _forward(
    params: list[dict],
    X: np.ndarray,
    activation: str,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, list[dict]]:
    """Forward pass; caches per-layer inputs and masks for backprop.
    Dropout (training mode) needs an rng."""
    cache = []
    A = X
    last = len(params) - 1
    for i, layer in enumerate(params):
        Z = A @ layer["W"] + layer["b"]
        if i == last:
            out = Z  # linear output layer
            mask = None
        else:
            out = np.maximum(Z, 0.0) if activation == "relu" else Z
            if dropout_rate > 0.0:
                mask = (rng.random(out.shape) >= dropout_rate) / (1.0 - dropout_rate)
                out = out * mask
            else:
                mask = None
        cache.append({"A_in": A, "Z": Z, "mask": mask})
        A = out
    return A, cache


def reconstruction_loss(X_hat: np.ndarray, X: np.ndarray) -> float:
    """Mean over rows of the per-row mean squared attribute error."""
    diff = X_hat - X
    return float((diff * diff).mean())


def _backward(
    params: list[dict], cache: list[dict], X_hat: np.ndarray, X: np.ndarray, activation: str
) -> list[dict]:
    """Gradients of reconstruction_loss w.r.t. every weight and bias."""
    n, d = X.shape
    grads = [None] * len(params)
    delta = 2.0 * (X_hat - X) / (n * d)
    for i in range(len(params) - 1, -1, -1):
        layer_cache = cache[i]
        if i < len(params) - 1:
            if layer_cache["mask"] is not None:
                delta = delta * layer_cache["mask"]
            if activation == "relu":
                delta = delta * (layer_cache["Z"] > 0.0)
        grads[i] = {
            "W": layer_cache["A_in"].T @ delta,
            "b": delta.sum(axis=0),
        }
        if i > 0:
            delta = delta @ params[i]["W"].T
    return grads


def network_gradients(
    params: list[dict], X: np.ndarray, activation: str = "relu"
) -> tuple[float, list[dict]]:
    """Loss and analytic gradients with dropout off (for checking)."""
    X_hat, cache = _forward(params, X, activation)
    return reconstruction_loss(X_hat, X), _backward(params, cache, X_hat, X, activation)


# --- error table -------------------------------------------------------------


@dataclass
class ErrorTable:
    attribute_errors: np.ndarray  # (n, d) absolute gaps
    total_error: np.ndarray  # (n,) mean squared gap per row
    target: np.ndarray  # (n,) 0/1
    feature_names: list[str] = dc_field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return int(self.total_error.shape[0])

    def nonfraud_totals(self) -> np.ndarray:
        return self.total_error[self.target == 0]

    def to_csv(self, path: str | os.PathLike) -> None:
        """Header: d attribute-error columns, total_error, target."""
        d = self.attribute_errors.shape[1]
        names = self.feature_names or [f"attr_{j}" for j in range(d)]
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(list(names) + ["total_error", "target"])
            for row, total, t in zip(self.attribute_errors, self.total_error, self.target):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(total)), int(t)])


def error_table(X_hat: np.ndarray, X: np.ndarray, target, feature_names=None) -> ErrorTable:
    diff = X_hat - X
    return ErrorTable(
        attribute_errors=np.abs(diff),
        total_error=(diff * diff).mean(axis=1),
        target=as_binary_vector(target, n_rows=X.shape[0], name="target"),
        feature_names=list(feature_names) if feature_names else [],
    )


# --- thresholding -------------------------------------------------------------


def nearest_rank_percentile(values: np.ndarray, percentile: float) -> float:
    """Nearest-rank percentile: the element at 1-based index
    ceil(p/100 * n) of the sorted list. p lies in (0, 100]."""
    if not 0.0 < percentile <= 100.0:
        raise PercentileOutOfRange(percentile)
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyErrors("cannot take a percentile of zero errors")
    ordered = np.sort(values)
    rank = math.ceil(percentile / 100.0 * ordered.size)
    return float(ordered[rank - 1])


def calibrate_threshold(errors: ErrorTable, percentile: float = 95.0) -> float:
    """Decision threshold: nearest-rank percentile of the non-fraud
    rows' total errors."""
    return nearest_rank_percentile(errors.nonfraud_totals(), percentile)


def classify_by_error(total_errors, threshold: float) -> np.ndarray:
    """Flag rows whose error strictly exceeds the threshold."""
    if not math.isfinite(threshold):
        raise InvalidHyperparameter("threshold must be finite")
    return (np.asarray(total_errors, dtype=np.float64) > threshold).astype(np.int64)


def threshold_sweep_error(
    errors: ErrorTable,
    percentiles: list[float],
    calibration: np.ndarray | None = None,
) -> list[dict]:
    """Percentile sweep for reconstruction-error models.

    Thresholds come from `calibration` errors (default: the table's own
    non-fraud rows). Percentile 0 flags everything; percentile 100 pins
    the threshold at the calibration maximum, so strict comparison flags
    nothing above it. Output rows are sorted by percentile.
    """
    from .metrics import confusion, scalar_metrics  # local to avoid cycle at import

    if calibration is None:
        calibration = errors.nonfraud_totals()
    calibration = np.asarray(calibration, dtype=np.float64)
    if calibration.size == 0:
        raise EmptyErrors("no non-fraud rows to calibrate against")
    rows = []
    for p in sorted(percentiles):
        p = float(p)
        if p == 0.0:
            threshold = float(calibration.min()) - 1.0  # below every error
        else:
            threshold = nearest_rank_percentile(calibration, p)
        flagged = classify_by_error(errors.total_error, threshold)
        cm = confusion(errors.target, flagged)
        metrics, _ = scalar_metrics(cm)
        rows.append(
            {
                "percentile": p,
                "threshold": threshold,
                "precision": metrics["precision"],
                "recall": metrics["recall"],
                "f1": metrics["f1"],
                "accuracy": metrics["accuracy"],
                "specificity": metrics["specificity"],
            }
        )
    return rows


# --- estimator ----------------------------------------------------------------


class ReconstructionAutoencoder(BaseEstimator):
    """Autoencoder anomaly scorer.

    fit(X, y) requires y because it enforces the training contract:
    every row must be non-fraud (y == 0), otherwise FraudRowsPresent is
    raised and nothing is trained.
    """

    def __init__(
        self,
        layer_sizes: list[int] | None = None,
        dropout_rate: float = 0.2,
        epochs: int = 100,
        batch_size: int = 32,
        learning_rate: float = 0.001,
        momentum: float = 0.9,
        hidden_activation: str = "relu",
        seed: int = 0,
        percentile: float = 95.0,
    ):
        self.layer_sizes = layer_sizes
        self.dropout_rate = dropout_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.hidden_activation = hidden_activation
        self.seed = seed
        self.percentile = percentile

    def _config(self, d: int) -> NetworkConfig:
        sizes = self.layer_sizes if self.layer_sizes is not None else default_layer_sizes(d)
        config = NetworkConfig(
            layer_sizes=list(sizes),
            dropout_rate=self.dropout_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            hidden_activation=self.hidden_activation,
            seed=self.seed,
        )
        config.validate()
        if config.layer_sizes[0] != d:
            raise InvalidHyperparameter(
                f"layer_sizes start at {config.layer_sizes[0]}, data has {d} columns"
            )
        return config

    def fit(self, X, y, feature_names: list[str] | None = None):
        X = as_float_matrix(X)
        y = as_binary_vector(y, n_rows=X.shape[0])
        if np.any(y != 0):
            raise FraudRowsPresent(
                f"{int(np.sum(y != 0))} fraud rows in autoencoder training input; "
                "the caller must filter to non-fraud rows"
            )
        config = self._config(X.shape[1])

        # Canonical row order: the seed alone determines batch composition.
        order = np.lexsort(X.T[::-1])
        X = X[order]

        rng = np.random.default_rng(config.seed)
        params = init_parameters(config.layer_sizes, rng)
        velocity = [
            {"W": np.zeros_like(p["W"]), "b": np.zeros_like(p["b"])} for p in params
        ]
        n = X.shape[0]
        curve: list[float] = []
        for epoch in range(config.epochs):
            perm = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, config.batch_size):
                batch = X[perm[start : start + config.batch_size]]
                X_hat, cache = _forward(
                    params,
                    batch,
                    config.hidden_activation,
                    dropout_rate=config.dropout_rate,
                    rng=rng,
                )
                loss = reconstruction_loss(X_hat, batch)
                epoch_loss += loss * batch.shape[0]
                grads = _backward(params, cache, X_hat, batch, config.hidden_activation)
                for p, v, g in zip(params, velocity, grads):
                    v["W"] = config.momentum * v["W"] - config.learning_rate * g["W"]
                    v["b"] = config.momentum * v["b"] - config.learning_rate * g["b"]
                    p["W"] = p["W"] + v["W"]
                    p["b"] = p["b"] + v["b"]
            mean_loss = epoch_loss / n
            if not math.isfinite(mean_loss):
                raise NonFiniteLoss(epoch, mean_loss)
            curve.append(mean_loss)

        self.parameters_ = params
        self.config_ = config
        self.training_loss_curve_ = curve
        self.n_features_in_ = X.shape[1]
        self.feature_names_ = list(feature_names) if feature_names else None
        self.threshold_ = None
        return self

    def _require_fitted(self) -> None:
        if not hasattr(self, "parameters_"):
            raise NotFittedError("fit must be called before scoring")

    def reconstruct(self, X) -> np.ndarray:
        """Inference-mode forward pass (no dropout)."""
        self._require_fitted()
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        X_hat, _ = _forward(self.parameters_, X, self.config_.hidden_activation)
        return X_hat

    def reconstruction_errors(self, X, y) -> ErrorTable:
        X = as_float_matrix(X)
        return error_table(self.reconstruct(X), X, y, self.feature_names_)

    def calibrate(self, errors: ErrorTable, percentile: float | None = None) -> float:
        threshold = calibrate_threshold(
            errors, self.percentile if percentile is None else percentile
        )
        self.threshold_ = threshold
        return threshold

    def predict(self, X, y=None) -> np.ndarray:
        """Flag anomalous rows using the calibrated threshold."""
        self._require_fitted()
        if self.threshold_ is None:
            raise NotFittedError("calibrate must be called before predict")
        X = as_float_matrix(X)
        diff = self.reconstruct(X) - X
        return classify_by_error((diff * diff).mean(axis=1), self.threshold_)

    def to_dict(self) -> dict:
        self._require_fitted()
        return {
            "layer_sizes": list(self.config_.layer_sizes),
            "weights": [p["W"].tolist() for p in self.parameters_],
            "biases": [p["b"].tolist() for p in self.parameters_],
            "hyperparameters": {
                "dropout_rate": self.config_.dropout_rate,
                "epochs": self.config_.epochs,
                "batch_size": self.config_.batch_size,
                "learning_rate": self.config_.learning_rate,
                "momentum": self.config_.momentum,
                "hidden_activation": self.config_.hidden_activation,
                "seed": self.config_.seed,
                "percentile": self.percentile,
            },
            "threshold": self.threshold_,
            "feature_names": self.feature_names_,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ReconstructionAutoencoder":
        hp = payload["hyperparameters"]
        model = cls(
            layer_sizes=list(payload["layer_sizes"]),
            dropout_rate=hp["dropout_rate"],
            epochs=hp["epochs"],
            batch_size=hp["batch_size"],
            learning_rate=hp["learning_rate"],
            momentum=hp["momentum"],
            hidden_activation=hp["hidden_activation"],
            seed=hp["seed"],
            percentile=hp["percentile"],
        )
        model.parameters_ = [
            {"W": np.asarray(w, dtype=np.float64), "b": np.asarray(b, dtype=np.float64)}
            for w, b in zip(payload["weights"], payload["biases"])
        ]
        model.config_ = NetworkConfig(
            layer_sizes=list(payload["layer_sizes"]),
            dropout_rate=hp["dropout_rate"],
            epochs=hp["epochs"],
            batch_size=hp["batch_size"],
            learning_rate=hp["learning_rate"],
            momentum=hp["momentum"],
            hidden_activation=hp["hidden_activation"],
            seed=hp["seed"],
        )
        model.training_loss_curve_ = []
        model.n_features_in_ = model.config_.layer_sizes[0]
        model.feature_names_ = payload.get("feature_names")
        model.threshold_ = payload.get("threshold")
        return model
