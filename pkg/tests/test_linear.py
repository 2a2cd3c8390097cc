"""Logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import math

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from claimguard.errors import (
    DimensionMismatch,
    InvalidHyperparameter,
    NonBinaryTarget,
    SingleClass,
)
from claimguard.linear import LogisticRegressionGD, bce_gradient, bce_loss, sigmoid


def toy_problem(n=120, seed=0):
    """Linearly separable-ish blobs with labels from a noisy plane."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    logits = 1.5 * X[:, 0] - 2.0 * X[:, 1] + 0.5
    y = (logits + rng.normal(scale=0.3, size=n) > 0).astype(int)
    return X, y


# --- numerics -----------------------------------------------------------------


def test_sigmoid_known_value():
    assert sigmoid(np.array([math.log(3.0)]))[0] == pytest.approx(0.75)


def test_sigmoid_is_stable_at_extremes():
    out = sigmoid(np.array([-500.0, 500.0]))
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(0.0, abs=1e-12)
    assert out[1] == pytest.approx(1.0, abs=1e-12)


def test_loss_at_zero_parameters_is_log_two():
    X, y = toy_problem()
    w = np.zeros(X.shape[1])
    assert bce_loss(w, 0.0, X, y, l2=0.0) == pytest.approx(math.log(2.0))


def test_l2_penalty_adds_half_squared_norm():
    X, y = toy_problem()
    w = np.array([1.0, -2.0, 0.5])
    bare = bce_loss(w, 0.0, X, y, l2=0.0)
    ridged = bce_loss(w, 0.0, X, y, l2=0.2)
    assert ridged - bare == pytest.approx(0.5 * 0.2 * float(w @ w))


def test_gradient_matches_finite_differences():
    X, y = toy_problem(n=40, seed=2)
    rng = np.random.default_rng(7)
    w = rng.normal(size=X.shape[1])
    b = float(rng.normal())
    grad_w, grad_b = bce_gradient(w, b, X, y, l2=0.05)
    h = 1e-6
    for j in range(len(w)):
        bump = np.zeros_like(w)
        bump[j] = h
        fd = (bce_loss(w + bump, b, X, y, 0.05) - bce_loss(w - bump, b, X, y, 0.05)) / (2 * h)
        assert grad_w[j] == pytest.approx(fd, rel=1e-6, abs=1e-9)
    fd_b = (bce_loss(w, b + h, X, y, 0.05) - bce_loss(w, b - h, X, y, 0.05)) / (2 * h)
    assert grad_b == pytest.approx(fd_b, rel=1e-6, abs=1e-9)


# --- training behavior ------------------------------------------------------------


def test_training_loss_decreases():
    X, y = toy_problem()
    model = LogisticRegressionGD(epochs=200, learning_rate=0.1, l2=0.0).fit(X, y)
    log = model.training_log_
    assert len(log) == 200
    assert log[-1] < log[0]
    # small steps on a convex loss: no epoch may increase it
    model_small = LogisticRegressionGD(epochs=50, learning_rate=0.01, l2=0.0).fit(X, y)
    diffs = np.diff(model_small.training_log_)
    assert np.all(diffs <= 1e-12)


def test_intercept_only_model_learns_base_rate():
    y = np.array([1] * 30 + [0] * 70)
    X = np.zeros((100, 1))
    model = LogisticRegressionGD(epochs=4000, learning_rate=0.5, l2=0.0).fit(X, y)
    assert model.bias_ == pytest.approx(math.log(0.3 / 0.7), abs=1e-3)
    assert model.predict_proba(X)[0] == pytest.approx(0.3, abs=1e-4)


def test_separable_data_reaches_high_accuracy():
    X, y = toy_problem()
    model = LogisticRegressionGD(epochs=500, learning_rate=0.5).fit(X, y)
    accuracy = float(np.mean(model.predict(X) == y))
    assert accuracy >= 0.95


def test_zero_epochs_keeps_zero_parameters():
    X, y = toy_problem()
    model = LogisticRegressionGD(epochs=0).fit(X, y)
    assert np.all(model.weights_ == 0.0)
    assert model.bias_ == 0.0
    assert np.all(model.predict_proba(X) == 0.5)


# --- contracts ---------------------------------------------------------------------


def test_predict_proba_shape_is_flat():
    X, y = toy_problem()
    model = LogisticRegressionGD(epochs=10).fit(X, y)
    assert model.predict_proba(X).shape == (X.shape[0],)


def test_unfitted_model_refuses_to_score():
    with pytest.raises(NotFittedError):
        LogisticRegressionGD().predict_proba(np.zeros((2, 2)))


def test_feature_count_checked_at_scoring():
    X, y = toy_problem()
    model = LogisticRegressionGD(epochs=5).fit(X, y)
    with pytest.raises(DimensionMismatch):
        model.predict_proba(np.zeros((4, 7)))


def test_non_binary_targets_rejected():
    X = np.zeros((3, 2))
    with pytest.raises(NonBinaryTarget):
        LogisticRegressionGD().fit(X, [0, 1, 2])


def test_bad_hyperparameters_rejected():
    X, y = toy_problem()
    with pytest.raises(InvalidHyperparameter):
        LogisticRegressionGD(learning_rate=0.0).fit(X, y)
    with pytest.raises(InvalidHyperparameter):
        LogisticRegressionGD(epochs=-1).fit(X, y)


def test_get_params_round_trip():
    model = LogisticRegressionGD(epochs=42, learning_rate=0.3, l2=0.01, threshold=0.6)
    params = model.get_params()
    clone = LogisticRegressionGD(**params)
    assert clone.get_params() == params


def test_serialization_round_trip():
    X, y = toy_problem()
    model = LogisticRegressionGD(epochs=50).fit(X, y, feature_names=["a", "b", "c"])
    restored = LogisticRegressionGD.from_dict(model.to_dict())
    assert np.allclose(restored.predict_proba(X), model.predict_proba(X))
    assert restored.feature_names_ == ["a", "b", "c"]
