"""Reconstruction autoencoder: network core, error scoring, percentile
thresholding, and the train-on-clean-rows contract."""

from __future__ import annotations

import warnings

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from claimguard.autoencoder import (
    ErrorTable,
    NetworkConfig,
    ReconstructionAutoencoder,
    apply_dropout,
    calibrate_threshold,
    classify_by_error,
    default_layer_sizes,
    error_table,
    init_parameters,
    nearest_rank_percentile,
    network_gradients,
    reconstruction_loss,
    threshold_sweep_error,
)
from claimguard.errors import (
    EmptyErrors,
    FraudRowsPresent,
    InvalidHyperparameter,
    NonFiniteLoss,
    PercentileOutOfRange,
)


def hourglass(d=6):
    return default_layer_sizes(d)


def gaussian_data(n=64, d=6, seed=0):
    rng = np.random.default_rng(seed)
    latent = rng.normal(size=(n, 2))
    mix = rng.normal(size=(2, d))
    return latent @ mix + 0.05 * rng.normal(size=(n, d))


# --- configuration --------------------------------------------------------------


def test_default_layer_sizes_narrow_and_mirror():
    assert default_layer_sizes(8) == [8, 4, 2, 4, 8]
    assert default_layer_sizes(5) == [5, 3, 2, 3, 5]
    assert default_layer_sizes(1) == [1, 1, 1, 1, 1]


def test_config_rejects_mismatched_ends():
    with pytest.raises(InvalidHyperparameter):
        NetworkConfig(layer_sizes=[4, 2, 3]).validate()


def test_config_rejects_expanding_hidden_layer():
    with pytest.raises(InvalidHyperparameter):
        NetworkConfig(layer_sizes=[4, 6, 4]).validate()


def test_config_allows_width_preserving_network():
    NetworkConfig(layer_sizes=[4, 4, 4], dropout_rate=0.0).validate()


def test_config_bounds():
    with pytest.raises(InvalidHyperparameter):
        NetworkConfig(layer_sizes=[4, 2, 4], dropout_rate=1.0).validate()
    with pytest.raises(InvalidHyperparameter):
        NetworkConfig(layer_sizes=[4, 2, 4], momentum=1.0).validate()
    with pytest.raises(InvalidHyperparameter):
        NetworkConfig(layer_sizes=[4, 2, 4], hidden_activation="tanh").validate()
    with pytest.raises(InvalidHyperparameter):
        NetworkConfig(layer_sizes=[4, 2]).validate()


# --- network core ------------------------------------------------------------------


def test_init_parameters_shapes_and_zero_biases():
    params = init_parameters([6, 3, 2, 3, 6], np.random.default_rng(0))
    shapes = [(p["W"].shape, p["b"].shape) for p in params]
    assert shapes == [((6, 3), (3,)), ((3, 2), (2,)), ((2, 3), (3,)), ((3, 6), (6,))]
    assert all(np.all(p["b"] == 0.0) for p in params)


def test_dropout_preserves_expectation():
    rng = np.random.default_rng(1)
    activations = np.ones((2000, 50))
    dropped = apply_dropout(rng, activations, rate=0.2)
    kept = dropped[dropped > 0]
    assert np.all(kept == pytest.approx(1.0 / 0.8))
    assert dropped.mean() == pytest.approx(1.0, abs=0.01)


def test_dropout_rate_zero_is_identity():
    activations = np.arange(6.0).reshape(2, 3)
    out = apply_dropout(np.random.default_rng(0), activations, rate=0.0)
    assert out is activations


def test_reconstruction_loss_is_mean_squared_gap():
    X = np.array([[0.0, 0.0]])
    X_hat = np.array([[0.3, -0.4]])
    assert reconstruction_loss(X_hat, X) == pytest.approx(0.125)


def test_gradients_match_finite_differences_linear():
    X = gaussian_data(n=10, d=4, seed=3)
    params = init_parameters([4, 2, 4], np.random.default_rng(5))
    _, grads = network_gradients(params, X, activation="linear")
    h = 1e-6
    for li, layer in enumerate(params):
        for key in ("W", "b"):
            flat = layer[key].reshape(-1)
            for idx in range(flat.size):
                original = flat[idx]
                flat[idx] = original + h
                up, _ = network_gradients(params, X, activation="linear")
                flat[idx] = original - h
                down, _ = network_gradients(params, X, activation="linear")
                flat[idx] = original
                fd = (up - down) / (2 * h)
                assert grads[li][key].reshape(-1)[idx] == pytest.approx(
                    fd, rel=1e-5, abs=1e-10
                )


# --- error table and thresholds -------------------------------------------------------


def test_error_table_worked_example():
    X = np.array([[0.0, 0.0]])
    X_hat = np.array([[0.3, -0.4]])
    table = error_table(X_hat, X, target=[0])
    assert table.attribute_errors[0] == pytest.approx([0.3, 0.4])
    assert table.total_error[0] == pytest.approx(0.125)


def test_nearest_rank_percentile_on_centiles():
    values = np.arange(1.0, 101.0)
    assert nearest_rank_percentile(values, 95) == 95.0
    assert nearest_rank_percentile(values, 100) == 100.0
    assert nearest_rank_percentile(values, 0.5) == 1.0


def test_percentile_domain_is_half_open():
    values = np.arange(1.0, 11.0)
    with pytest.raises(PercentileOutOfRange):
        nearest_rank_percentile(values, 0.0)
    with pytest.raises(PercentileOutOfRange):
        nearest_rank_percentile(values, 100.5)
    with pytest.raises(EmptyErrors):
        nearest_rank_percentile(np.array([]), 50)


def test_calibration_uses_only_clean_rows():
    table = ErrorTable(
        attribute_errors=np.zeros((4, 1)),
        total_error=np.array([1.0, 2.0, 3.0, 100.0]),
        target=np.array([0, 0, 0, 1]),
    )
    assert calibrate_threshold(table, percentile=100) == 3.0


def test_classification_is_strictly_greater():
    flags = classify_by_error([1.0, 2.0, 3.0], threshold=2.0)
    assert flags.tolist() == [0, 0, 1]
    with pytest.raises(InvalidHyperparameter):
        classify_by_error([1.0], threshold=float("inf"))


def test_sweep_monotone_and_zero_percentile_flags_all():
    rng = np.random.default_rng(2)
    clean = rng.random(80)
    fraud = rng.random(20) + 0.5
    table = ErrorTable(
        attribute_errors=np.zeros((100, 1)),
        total_error=np.concatenate([clean, fraud]),
        target=np.array([0] * 80 + [1] * 20),
    )
    rows = threshold_sweep_error(table, percentiles=[0, 25, 50, 75, 90, 95, 100])
    assert rows[0]["percentile"] == 0.0
    assert rows[0]["recall"] == 1.0
    assert rows[0]["specificity"] == 0.0
    recalls = [r["recall"] for r in rows]
    specificities = [r["specificity"] for r in rows]
    assert recalls == sorted(recalls, reverse=True)
    assert specificities == sorted(specificities)
    assert rows[-1]["specificity"] == 1.0


# --- estimator ---------------------------------------------------------------------


def test_fit_rejects_fraud_rows():
    X = gaussian_data(n=20, d=4)
    y = np.zeros(20, dtype=int)
    y[3] = 1
    with pytest.raises(FraudRowsPresent):
        ReconstructionAutoencoder(epochs=1).fit(X, y)


def test_identity_sized_linear_network_learns_identity():
    X = gaussian_data(n=128, d=4, seed=6)
    model = ReconstructionAutoencoder(
        layer_sizes=[4, 4, 4],
        dropout_rate=0.0,
        epochs=1200,
        batch_size=16,
        learning_rate=0.02,
        momentum=0.9,
        hidden_activation="linear",
        seed=0,
    ).fit(X, np.zeros(len(X)))
    assert model.training_loss_curve_[-1] < 1e-4


def test_training_is_deterministic_and_order_free():
    X = gaussian_data(n=60, d=5, seed=7)
    y = np.zeros(len(X))
    first = ReconstructionAutoencoder(epochs=5, seed=3).fit(X, y)
    shuffled = X[np.random.default_rng(9).permutation(len(X))]
    second = ReconstructionAutoencoder(epochs=5, seed=3).fit(shuffled, y)
    for a, b in zip(first.parameters_, second.parameters_):
        assert np.array_equal(a["W"], b["W"])
        assert np.array_equal(a["b"], b["b"])


def test_different_seed_changes_parameters():
    X = gaussian_data(n=60, d=5, seed=7)
    y = np.zeros(len(X))
    first = ReconstructionAutoencoder(epochs=3, seed=3).fit(X, y)
    second = ReconstructionAutoencoder(epochs=3, seed=4).fit(X, y)
    assert any(
        not np.array_equal(a["W"], b["W"])
        for a, b in zip(first.parameters_, second.parameters_)
    )


def test_anomalies_score_above_trained_manifold():
    X = gaussian_data(n=200, d=6, seed=8)
    model = ReconstructionAutoencoder(
        epochs=150, dropout_rate=0.0, learning_rate=0.01, seed=1
    ).fit(X, np.zeros(len(X)))
    table = model.reconstruction_errors(X, np.zeros(len(X)))
    model.calibrate(table, percentile=95)
    # rows far off the training manifold must be flagged
    outliers = np.full((5, 6), 8.0)
    assert np.all(model.predict(outliers) == 1)
    # the calibration split itself stays below the flag rate ceiling
    assert model.predict(X).mean() <= 0.05 + 1e-9


def test_losses_blow_up_is_reported():
    X = gaussian_data(n=40, d=4, seed=9) * 1e6
    with np.errstate(over="ignore", invalid="ignore"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(NonFiniteLoss):
                ReconstructionAutoencoder(
                    epochs=50, learning_rate=1e9, dropout_rate=0.0, seed=0
                ).fit(X, np.zeros(len(X)))


def test_wrong_layer_head_rejected():
    X = gaussian_data(n=20, d=4)
    with pytest.raises(InvalidHyperparameter):
        ReconstructionAutoencoder(layer_sizes=[5, 2, 5], epochs=1).fit(
            X, np.zeros(len(X))
        )


def test_predict_requires_calibration():
    X = gaussian_data(n=30, d=4)
    model = ReconstructionAutoencoder(epochs=1, seed=0).fit(X, np.zeros(len(X)))
    with pytest.raises(NotFittedError):
        model.predict(X)


def test_unfitted_model_refuses_to_reconstruct():
    with pytest.raises(NotFittedError):
        ReconstructionAutoencoder().reconstruct(np.zeros((2, 2)))


def test_error_table_csv(tmp_path):
    X = gaussian_data(n=12, d=3, seed=10)
    model = ReconstructionAutoencoder(epochs=2, seed=0).fit(
        X, np.zeros(len(X)), feature_names=["f0", "f1", "f2"]
    )
    table = model.reconstruction_errors(X, np.zeros(len(X)))
    path = tmp_path / "errors.csv"
    table.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "f0,f1,f2,total_error,target"
    assert len(lines) == len(X) + 1


def test_serialization_round_trip():
    X = gaussian_data(n=40, d=5, seed=11)
    model = ReconstructionAutoencoder(epochs=4, seed=2).fit(X, np.zeros(len(X)))
    table = model.reconstruction_errors(X, np.zeros(len(X)))
    model.calibrate(table)
    restored = ReconstructionAutoencoder.from_dict(model.to_dict())
    assert np.allclose(restored.reconstruct(X), model.reconstruct(X))
    assert restored.threshold_ == model.threshold_
    assert np.array_equal(restored.predict(X), model.predict(X))
