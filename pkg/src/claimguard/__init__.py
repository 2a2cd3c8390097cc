"""Claims fraud detection toolkit: four-table ingest, synthetic corpora
with planted schemes, feature engineering, supervised baselines, and
reconstruction-error anomaly models with percentile thresholding."""

from .autoencoder import (
    ErrorTable,
    NetworkConfig,
    ReconstructionAutoencoder,
    calibrate_threshold,
    classify_by_error,
    default_layer_sizes,
    nearest_rank_percentile,
    threshold_sweep_error,
)
from .errors import ClaimGuardError, ConfigError, DataError, NumericError
from .features import (
    FeatureMatrix,
    SparseCodeMatrix,
    age_band_fraud_rates,
    build_features,
    compute_age,
    fraud_proportion,
    group_by_similarity,
    sparse_encode_codes,
    standardize_columns,
    top_codes_by_amount,
)
from .forest import RandomForestGini
from .ingest import (
    BeneficiaryRecord,
    ClaimRecord,
    MergedDataset,
    ProviderLabel,
    Setting,
    merge_dataset,
    parse_beneficiaries,
    parse_claims,
    parse_labels,
)
from .linear import LogisticRegressionGD
from .metrics import (
    ConfusionMatrix,
    EvaluationReport,
    classify,
    cohen_kappa,
    confusion,
    evaluate,
    roc_auc,
    roc_points,
    scalar_metrics,
)
from .pca import StandardizedPCA
from .pipeline import PipelineConfig, run_pipeline, split_matrix
from .synth import SynthConfig, generate, write_corpus

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BeneficiaryRecord",
    "ClaimGuardError",
    "ClaimRecord",
    "ConfigError",
    "ConfusionMatrix",
    "DataError",
    "ErrorTable",
    "EvaluationReport",
    "FeatureMatrix",
    "LogisticRegressionGD",
    "MergedDataset",
    "NetworkConfig",
    "NumericError",
    "PipelineConfig",
    "ProviderLabel",
    "RandomForestGini",
    "ReconstructionAutoencoder",
    "Setting",
    "SparseCodeMatrix",
    "StandardizedPCA",
    "SynthConfig",
    "age_band_fraud_rates",
    "build_features",
    "calibrate_threshold",
    "classify",
    "classify_by_error",
    "cohen_kappa",
    "compute_age",
    "confusion",
    "default_layer_sizes",
    "evaluate",
    "fraud_proportion",
    "generate",
    "group_by_similarity",
    "merge_dataset",
    "nearest_rank_percentile",
    "parse_beneficiaries",
    "parse_claims",
    "parse_labels",
    "roc_auc",
    "roc_points",
    "run_pipeline",
    "scalar_metrics",
    "sparse_encode_codes",
    "split_matrix",
    "standardize_columns",
    "threshold_sweep_error",
    "top_codes_by_amount",
    "write_corpus",
]
