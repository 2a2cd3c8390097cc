"""End-to-end orchestration: load or synthesize the four tables, merge,
build features, split by provider, fit the chosen model, and write the
artifact set (model.json, report.json, roc.csv, sweep.csv,
join_report.json).

The split is provider-stratified: every claim of a provider lands on one
side, and the fraud / non-fraud provider proportions carry over to
within one provider (floor(fraction * n + 0.5) per class). One master
seed drives the split and any model randomness, so a rerun of the same
config is byte-identical.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .autoencoder import (
    ErrorTable,
    ReconstructionAutoencoder,
    calibrate_threshold,
    default_layer_sizes,
    nearest_rank_percentile,
    threshold_sweep_error,
)
from .errors import (
    FeatureMismatch,
    InvalidConfig,
    MissingInputFile,
    TooFewProviders,
)
from .features import (
    DEFAULT_EPOCH,
    UNIT_CLAIM,
    UNIT_PROVIDER,
    FeatureMatrix,
    age_band_fraud_rates,
    build_features,
    claim_volume_outliers,
    fraud_proportion,
    top_codes_by_amount,
)
from .forest import RandomForestGini
from .ingest import (
    BeneficiarySchema,
    ClaimsSchema,
    LabelSchema,
    MergedDataset,
    Setting,
    merge_dataset,
    parse_beneficiaries,
    parse_claims,
    parse_labels,
)
from .linear import LogisticRegressionGD
from .metrics import (
    evaluate,
    threshold_sweep,
    write_report_json,
    write_roc_csv,
    write_sweep_csv,
)
from .pca import StandardizedPCA
from .synth import SynthConfig, generate

MODEL_LOGREG = "logreg"
MODEL_FOREST = "forest"
MODEL_PCA = "pca-recon"
MODEL_AUTOENCODER = "autoencoder"
MODELS = (MODEL_LOGREG, MODEL_FOREST, MODEL_PCA, MODEL_AUTOENCODER)

RUN_ARTIFACTS = ("model.json", "report.json", "roc.csv", "sweep.csv", "join_report.json")

MODEL_FORMAT = "claimguard-model"
MODEL_FORMAT_VERSION = 1

_DEFAULT_SWEEP_THRESHOLDS = [round(0.05 * i, 2) for i in range(1, 20)]
_DEFAULT_SWEEP_PERCENTILES = [0.0, 50.0, 75.0, 90.0, 95.0, 99.0, 100.0]

_CONFIG_KEYS = {
    "data",
    "synth",
    "unit",
    "test_fraction",
    "seed",
    "model",
    "hyperparameters",
    "threshold",
    "percentile",
    "sweep_thresholds",
    "sweep_percentiles",
    "out_dir",
    "epoch_date",
    "columns",
}

_DATA_KEYS = ("beneficiaries", "inpatient", "outpatient", "labels")


@dataclass
class PipelineConfig:
    data: dict | None = None  # paths: beneficiaries/inpatient/outpatient/labels
    synth: SynthConfig | None = None
    unit: str = UNIT_CLAIM
    test_fraction: float = 0.3
    seed: int = 42
    model: str = MODEL_AUTOENCODER
    hyperparameters: dict = field(default_factory=dict)
    threshold: float = 0.5
    percentile: float = 95.0
    sweep_thresholds: list[float] = field(default_factory=lambda: list(_DEFAULT_SWEEP_THRESHOLDS))
    sweep_percentiles: list[float] = field(default_factory=lambda: list(_DEFAULT_SWEEP_PERCENTILES))
    out_dir: str = "out"
    epoch_date: date = DEFAULT_EPOCH
    columns: dict = field(default_factory=dict)

    def validate(self) -> None:
        if (self.data is None) == (self.synth is None):
            raise InvalidConfig("exactly one of 'data' and 'synth' must be set")
        if self.data is not None:
            missing = [k for k in _DATA_KEYS if k not in self.data]
            if missing:
                raise InvalidConfig(f"data section lacks paths for: {missing}")
        if self.unit not in (UNIT_CLAIM, UNIT_PROVIDER):
            raise InvalidConfig(f"unit must be claim or provider, got {self.unit!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise InvalidConfig("test_fraction must lie strictly between 0 and 1")
        if self.model not in MODELS:
            raise InvalidConfig(f"model must be one of {MODELS}, got {self.model!r}")
        if not math.isfinite(self.threshold):
            raise InvalidConfig("threshold must be finite")
        if not 0.0 < self.percentile <= 100.0:
            raise InvalidConfig("percentile must lie in (0, 100]")

    @staticmethod
    def from_json(path: str | os.PathLike) -> "PipelineConfig":
        if not os.path.exists(path):
            raise InvalidConfig(f"config file does not exist: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            try:
                raw = json.load(handle)
            except json.JSONDecodeError as exc:
                raise InvalidConfig(f"config is not valid JSON: {exc}") from None
        return PipelineConfig.from_dict(raw)

    @staticmethod
    def from_dict(raw: dict) -> "PipelineConfig":
        if not isinstance(raw, dict):
            raise InvalidConfig("config root must be a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        cfg = PipelineConfig()
        if "data" in raw and raw["data"] is not None:
            cfg.data = dict(raw["data"])
        if "synth" in raw and raw["synth"] is not None:
            synth_raw = dict(raw["synth"])
            try:
                cfg.synth = SynthConfig(**synth_raw)
            except TypeError as exc:
                raise InvalidConfig(f"bad synth section: {exc}") from None
        for key in (
            "unit",
            "test_fraction",
            "seed",
            "model",
            "hyperparameters",
            "threshold",
            "percentile",
            "sweep_thresholds",
            "sweep_percentiles",
            "out_dir",
            "columns",
        ):
            if key in raw and raw[key] is not None:
                setattr(cfg, key, raw[key])
        if "epoch_date" in raw and raw["epoch_date"] is not None:
            try:
                cfg.epoch_date = date.fromisoformat(raw["epoch_date"])
            except ValueError:
                raise InvalidConfig(
                    f"epoch_date must be YYYY-MM-DD, got {raw['epoch_date']!r}"
                ) from None
        cfg.validate()
        return cfg

    def apply_overrides(
        self,
        model: str | None = None,
        seed: int | None = None,
        percentile: float | None = None,
        threshold: float | None = None,
        out_dir: str | None = None,
    ) -> "PipelineConfig":
        if model is not None:
            self.model = model
        if seed is not None:
            self.seed = seed
        if percentile is not None:
            self.percentile = percentile
        if threshold is not None:
            self.threshold = threshold
        if out_dir is not None:
            self.out_dir = out_dir
        self.validate()
        return self


def _schemas(cfg: PipelineConfig) -> tuple[BeneficiarySchema, ClaimsSchema, LabelSchema]:
    columns = cfg.columns or {}
    try:
        bene_over = dict(columns.get("beneficiary", {}))
        if "chronic" in bene_over:
            bene_over["chronic"] = tuple(bene_over["chronic"])
        return (
            BeneficiarySchema(**bene_over),
            ClaimsSchema(**columns.get("claims", {})),
            LabelSchema(**columns.get("labels", {})),
        )
    except TypeError as exc:
        raise InvalidConfig(f"bad columns section: {exc}") from None


def load_merged(cfg: PipelineConfig) -> MergedDataset:
    """Materialize the merged dataset from CSV paths or the synthesizer."""
    if cfg.synth is not None:
        tables = generate(cfg.synth)
        return merge_dataset(
            tables.claims_inpatient,
            tables.claims_outpatient,
            tables.beneficiaries,
            tables.labels,
        )
    bene_schema, claims_schema, label_schema = _schemas(cfg)
    for key in _DATA_KEYS:
        if not os.path.exists(cfg.data[key]):
            raise MissingInputFile(str(cfg.data[key]))
    return merge_dataset(
        parse_claims(cfg.data["inpatient"], Setting.INPATIENT, claims_schema),
        parse_claims(cfg.data["outpatient"], Setting.OUTPATIENT, claims_schema),
        parse_beneficiaries(cfg.data["beneficiaries"], bene_schema),
        parse_labels(cfg.data["labels"], label_schema),
    )


# --- provider-stratified split ---------------------------------------------


def split_matrix(
    fm: FeatureMatrix, test_fraction: float, seed: int
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Split rows so each provider lands wholly on one side and each
    class contributes floor(fraction * n + 0.5) providers to the test
    side."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfig("test_fraction must lie strictly between 0 and 1")
    label_of: dict[str, int] = {}
    for provider, t in zip(fm.row_providers, fm.target):
        label_of[provider] = int(t)
    fraud = sorted(p for p, t in label_of.items() if t == 1)
    clean = sorted(p for p, t in label_of.items() if t == 0)
    if len(fraud) < 2 or len(clean) < 2:
        raise TooFewProviders(
            f"need at least 2 providers per class, got {len(fraud)} fraud / "
            f"{len(clean)} non-fraud"
        )
    rng = np.random.default_rng(seed)
    fraud_order = [fraud[i] for i in rng.permutation(len(fraud))]
    clean_order = [clean[i] for i in rng.permutation(len(clean))]
    n_test_fraud = math.floor(test_fraction * len(fraud) + 0.5)
    n_test_clean = math.floor(test_fraction * len(clean) + 0.5)
    test_providers = set(fraud_order[:n_test_fraud]) | set(clean_order[:n_test_clean])
    mask = np.array([p in test_providers for p in fm.row_providers])
    return fm.subset(~mask), fm.subset(mask)


# --- model orchestration -----------------------------------------------------


def _model_seed(cfg: PipelineConfig) -> int:
    return int(cfg.hyperparameters.get("seed", cfg.seed))


@dataclass
class FitResult:
    model_name: str
    model_payload: dict
    scores: np.ndarray  # on the test side
    decision_rule: str
    threshold: float
    sweep_rows: list[dict]


def _hp(cfg: PipelineConfig, name: str, default):
    return cfg.hyperparameters.get(name, default)


def fit_and_score(cfg: PipelineConfig, train: FeatureMatrix, test: FeatureMatrix) -> FitResult:
    names = train.column_names
    if cfg.model == MODEL_LOGREG:
        model = LogisticRegressionGD(
            epochs=int(_hp(cfg, "epochs", 2000)),
            learning_rate=float(_hp(cfg, "learning_rate", 0.5)),
            l2=float(_hp(cfg, "l2", 1e-4)),
            threshold=cfg.threshold,
        ).fit(train.values, train.target, feature_names=names)
        scores = model.predict_proba(test.values)
        sweep = threshold_sweep(scores, test.target, cfg.sweep_thresholds, "ge")
        return FitResult(cfg.model, model.to_dict(), scores, "ge", cfg.threshold, sweep)

    if cfg.model == MODEL_FOREST:
        model = RandomForestGini(
            n_trees=int(_hp(cfg, "n_trees", 100)),
            max_depth=int(_hp(cfg, "max_depth", 8)),
            min_leaf=int(_hp(cfg, "min_leaf", 1)),
            features_per_split=_hp(cfg, "features_per_split", None),
            seed=_model_seed(cfg),
            threshold=cfg.threshold,
        ).fit(train.values, train.target, feature_names=names)
        scores = model.predict_proba(test.values)
        sweep = threshold_sweep(scores, test.target, cfg.sweep_thresholds, "ge")
        return FitResult(cfg.model, model.to_dict(), scores, "ge", cfg.threshold, sweep)

    nonfraud = train.subset(train.target == 0)

    if cfg.model == MODEL_AUTOENCODER:
        model = ReconstructionAutoencoder(
            layer_sizes=_hp(cfg, "layer_sizes", None),
            dropout_rate=float(_hp(cfg, "dropout_rate", 0.2)),
            epochs=int(_hp(cfg, "epochs", 100)),
            batch_size=int(_hp(cfg, "batch_size", 32)),
            learning_rate=float(_hp(cfg, "learning_rate", 0.001)),
            momentum=float(_hp(cfg, "momentum", 0.9)),
            hidden_activation=str(_hp(cfg, "hidden_activation", "relu")),
            seed=_model_seed(cfg),
            percentile=cfg.percentile,
        ).fit(nonfraud.values, nonfraud.target, feature_names=names)
        calibration = model.reconstruction_errors(nonfraud.values, nonfraud.target)
        threshold = model.calibrate(calibration, cfg.percentile)
        test_errors = model.reconstruction_errors(test.values, test.target)
        sweep = threshold_sweep_error(
            test_errors, cfg.sweep_percentiles, calibration.total_error
        )
        return FitResult(
            cfg.model, model.to_dict(), test_errors.total_error, "gt", threshold, sweep
        )

    if cfg.model == MODEL_PCA:
        d = train.n_features
        model = StandardizedPCA(
            n_components=int(_hp(cfg, "n_components", max(1, math.ceil(d / 4)))),
            rank_tol=float(_hp(cfg, "rank_tol", 1e-12)),
        ).fit(nonfraud.values, feature_names=names)
        calibration = _pca_error_table(model, nonfraud)
        threshold = nearest_rank_percentile(calibration.total_error, cfg.percentile)
        test_errors = _pca_error_table(model, test)
        sweep = threshold_sweep_error(
            test_errors, cfg.sweep_percentiles, calibration.total_error
        )
        payload = model.to_dict()
        payload["threshold"] = threshold
        return FitResult(
            cfg.model, payload, test_errors.total_error, "gt", threshold, sweep
        )

    raise InvalidConfig(f"unknown model {cfg.model!r}")


def _pca_error_table(model: StandardizedPCA, fm: FeatureMatrix) -> ErrorTable:
    residuals = model.reconstruction_residuals(fm.values)
    return ErrorTable(
        attribute_errors=np.abs(residuals),
        total_error=(residuals * residuals).mean(axis=1),
        target=fm.target,
        feature_names=list(fm.column_names),
    )


# --- artifact writing ---------------------------------------------------------


def _model_document(cfg: PipelineConfig, result: FitResult) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "model": result.model_name,
        "seed": _model_seed(cfg),
        "payload": result.model_payload,
    }


def _report_extras(cfg: PipelineConfig, train: FeatureMatrix, test: FeatureMatrix) -> dict:
    return {
        "config": {
            "model": cfg.model,
            "unit": cfg.unit,
            "seed": cfg.seed,
            "test_fraction": cfg.test_fraction,
            "threshold": cfg.threshold,
            "percentile": cfg.percentile,
            "n_train_rows": train.n_rows,
            "n_test_rows": test.n_rows,
        }
    }


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Execute ingest/synth -> features -> split -> train -> evaluate and
    write the full artifact set into cfg.out_dir. Returns the paths."""
    cfg.validate()
    dataset = load_merged(cfg)
    fm = build_features(dataset, unit=cfg.unit, epoch=cfg.epoch_date)
    train, test = split_matrix(fm, cfg.test_fraction, cfg.seed)
    result = fit_and_score(cfg, train, test)

    report = evaluate(result.scores, test.target, result.threshold, result.decision_rule)
    report.threshold_table = result.sweep_rows

    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = {name: os.path.join(cfg.out_dir, name) for name in RUN_ARTIFACTS}
    with open(paths["model.json"], "w", encoding="utf-8") as handle:
        json.dump(_model_document(cfg, result), handle, indent=2, sort_keys=True)
        handle.write("\n")
    write_report_json(report, paths["report.json"], _report_extras(cfg, train, test))
    write_roc_csv(report, paths["roc.csv"])
    write_sweep_csv(result.sweep_rows, paths["sweep.csv"])
    with open(paths["join_report.json"], "w", encoding="utf-8") as handle:
        json.dump(dataset.dropped.to_json_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return paths


def train_only(cfg: PipelineConfig) -> str:
    """Fit on the training side and write model.json alone."""
    cfg.validate()
    dataset = load_merged(cfg)
    fm = build_features(dataset, unit=cfg.unit, epoch=cfg.epoch_date)
    train, test = split_matrix(fm, cfg.test_fraction, cfg.seed)
    result = fit_and_score(cfg, train, test)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "model.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_model_document(cfg, result), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _load_model_document(path: str | os.PathLike) -> dict:
    if not os.path.exists(path):
        raise MissingInputFile(str(path))
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("format") != MODEL_FORMAT or "payload" not in doc:
        raise InvalidConfig(f"{path} is not a {MODEL_FORMAT} document")
    return doc


def evaluate_saved(cfg: PipelineConfig, model_path: str | os.PathLike) -> dict:
    """Score the configured test split with a saved model document and
    write report.json + roc.csv."""
    cfg.validate()
    doc = _load_model_document(model_path)
    dataset = load_merged(cfg)
    fm = build_features(dataset, unit=cfg.unit, epoch=cfg.epoch_date)
    train, test = split_matrix(fm, cfg.test_fraction, cfg.seed)

    payload = doc["payload"]
    saved_names = payload.get("feature_names")
    if saved_names is not None and list(saved_names) != list(fm.column_names):
        raise FeatureMismatch(
            "feature columns differ from training; refusing to score "
            f"(saved {len(saved_names)} columns, built {len(fm.column_names)})"
        )

    name = doc.get("model")
    if name == MODEL_LOGREG:
        model = LogisticRegressionGD.from_dict(payload)
        scores = model.predict_proba(test.values)
        rule, threshold = "ge", float(cfg.threshold)
    elif name == MODEL_FOREST:
        model = RandomForestGini.from_dict(payload)
        scores = model.predict_proba(test.values)
        rule, threshold = "ge", float(cfg.threshold)
    elif name == MODEL_AUTOENCODER:
        model = ReconstructionAutoencoder.from_dict(payload)
        table = model.reconstruction_errors(test.values, test.target)
        scores = table.total_error
        saved_threshold = payload.get("threshold")
        if saved_threshold is None:
            nonfraud = train.subset(train.target == 0)
            saved_threshold = calibrate_threshold(
                model.reconstruction_errors(nonfraud.values, nonfraud.target),
                cfg.percentile,
            )
        rule, threshold = "gt", float(saved_threshold)
    elif name == MODEL_PCA:
        model = StandardizedPCA.from_dict(payload)
        table = _pca_error_table(model, test)
        scores = table.total_error
        saved_threshold = payload.get("threshold")
        if saved_threshold is None:
            nonfraud = train.subset(train.target == 0)
            saved_threshold = nearest_rank_percentile(
                _pca_error_table(model, nonfraud).total_error, cfg.percentile
            )
        rule, threshold = "gt", float(saved_threshold)
    else:
        raise InvalidConfig(f"unknown model kind in document: {name!r}")

    report = evaluate(scores, test.target, threshold, rule)
    os.makedirs(cfg.out_dir, exist_ok=True)
    report_path = os.path.join(cfg.out_dir, "report.json")
    roc_path = os.path.join(cfg.out_dir, "roc.csv")
    write_report_json(report, report_path, _report_extras(cfg, train, test))
    write_roc_csv(report, roc_path)
    return {"report.json": report_path, "roc.csv": roc_path}


def sweep_only(cfg: PipelineConfig) -> str:
    """Fit and write just the threshold/percentile trade-off table."""
    cfg.validate()
    dataset = load_merged(cfg)
    fm = build_features(dataset, unit=cfg.unit, epoch=cfg.epoch_date)
    train, test = split_matrix(fm, cfg.test_fraction, cfg.seed)
    result = fit_and_score(cfg, train, test)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "sweep.csv")
    write_sweep_csv(result.sweep_rows, path)
    return path


def eda_report(cfg: PipelineConfig) -> dict:
    """Dataset-level summary: class balance, top diagnosis codes by
    money, age-band fraud rates, and claim-volume outlier providers."""
    cfg.validate()
    dataset = load_merged(cfg)
    pct_clean, pct_fraud = fraud_proportion(dataset)
    top = top_codes_by_amount(dataset, k=10)
    bands = age_band_fraud_rates(dataset, epoch=cfg.epoch_date)
    return {
        "n_claims": len(dataset.rows),
        "source_counts": {
            "n_inpatient": dataset.source_counts.n_inpatient,
            "n_outpatient": dataset.source_counts.n_outpatient,
            "n_beneficiaries": dataset.source_counts.n_beneficiaries,
            "n_providers": dataset.source_counts.n_providers,
        },
        "class_balance_pct": {"non_fraud": pct_clean, "fraud": pct_fraud},
        "top_diagnosis_codes": [
            {
                "code": c.code,
                "total_reimbursed": c.total_dollars,
                "fraud_claims": c.fraud_claims,
                "nonfraud_claims": c.nonfraud_claims,
            }
            for c in top
        ],
        "age_bands": [
            {
                "lower": b.lower,
                "upper": b.upper,
                "n_claims": b.n_claims,
                "fraud_rate": b.fraud_rate,
                "empty": b.empty,
            }
            for b in bands
        ],
        "claim_volume_outliers": claim_volume_outliers(dataset),
        "join_report": dataset.dropped.to_json_dict(),
    }


def write_eda_json(cfg: PipelineConfig) -> str:
    payload = eda_report(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "eda.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path
