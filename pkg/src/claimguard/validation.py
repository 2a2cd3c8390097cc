"""Small input-validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyMatrix,
    LengthMismatch,
    NonBinaryTarget,
)


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with at least one row and column."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise EmptyMatrix(f"{name} has shape {arr.shape}; need at least one row and column")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} contains NaN or infinite entries")
    return arr


def as_binary_vector(y, n_rows: int | None = None, name: str = "y") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if n_rows is not None and arr.shape[0] != n_rows:
        raise LengthMismatch(f"{name} has {arr.shape[0]} entries, expected {n_rows}")
    values = np.unique(arr)
    if not np.all(np.isin(values, (0, 1))):
        raise NonBinaryTarget(f"{name} must contain only 0/1, got values {values[:8]}")
    return arr.astype(np.int64)


def check_n_features(X: np.ndarray, expected: int, name: str = "X") -> None:
    if X.shape[1] != expected:
        raise DimensionMismatch(
            f"{name} has {X.shape[1]} columns, model was fit with {expected}"
        )


def check_same_length(a, b, what: str = "scores/labels") -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"{what}: lengths differ ({len(a)} vs {len(b)})")
