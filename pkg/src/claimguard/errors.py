"""Exception hierarchy.

Three broad families map onto the CLI exit codes: configuration problems
(exit 2), data problems (exit 3), and numeric failures during training
(exit 4). Everything raised by this package derives from ClaimGuardError.
"""

from __future__ import annotations


class ClaimGuardError(Exception):
    exit_code = 1


class ConfigError(ClaimGuardError):
    """Invalid configuration, hyperparameters, or argument values."""

    exit_code = 2


class DataError(ClaimGuardError):
    """Malformed, inconsistent, or missing input data."""

    exit_code = 3


class NumericError(ClaimGuardError):
    """Numeric failure while fitting (divergence, overflow)."""

    exit_code = 4


# --- data errors ---------------------------------------------------------


class MissingColumn(DataError):
    def __init__(self, column: str, table: str):
        super().__init__(f"{table}: required column {column!r} not in header")
        self.column = column
        self.table = table


class UnparseableDate(DataError):
    def __init__(self, row: int, column: str, text: str = ""):
        super().__init__(
            f"row {row}: column {column!r} does not hold a YYYY-MM-DD date"
            + (f" (got {text!r})" if text else " (blank)")
        )
        self.row = row
        self.column = column


class UnparseableAmount(DataError):
    def __init__(self, row: int, column: str, text: str):
        super().__init__(f"row {row}: column {column!r} is not a money amount (got {text!r})")
        self.row = row
        self.column = column


class NegativeAmount(DataError):
    def __init__(self, row: int, column: str, text: str):
        super().__init__(f"row {row}: column {column!r} holds a negative amount ({text!r})")
        self.row = row
        self.column = column


class InvalidDateOrder(DataError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UnknownFlagValue(DataError):
    def __init__(self, row: int, column: str, text: str):
        super().__init__(f"row {row}: column {column!r} holds unknown flag value {text!r}")
        self.row = row
        self.column = column


class DuplicateKey(DataError):
    def __init__(self, key: str, table: str):
        super().__init__(f"{table}: duplicate key {key!r}")
        self.key = key


class EmptyJoinResult(DataError):
    pass


class MissingInputFile(DataError):
    def __init__(self, path: str):
        super().__init__(f"input file does not exist: {path}")
        self.path = path


class EmptyDataset(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class EmptyErrors(DataError):
    pass


class ReferenceBeforeBirth(DataError):
    pass


class NonBinaryTarget(DataError):
    pass


class LengthMismatch(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class FeatureMismatch(DataError):
    """Scoring matrix columns differ from the columns seen at fit time."""


class SingleClass(DataError):
    pass


class FraudRowsPresent(DataError):
    pass


class TooFewProviders(DataError):
    pass


# --- config errors -------------------------------------------------------


class InvalidConfig(ConfigError):
    pass


class InvalidHyperparameter(ConfigError):
    pass


class PercentileOutOfRange(ConfigError):
    def __init__(self, value: float):
        super().__init__(f"percentile must lie in (0, 100], got {value!r}")
        self.value = value


class KTooLarge(ConfigError):
    def __init__(self, k: int, limit: int):
        super().__init__(f"cannot keep {k} components; at most {limit} are identifiable")
        self.k = k
        self.limit = limit


class NonMonotoneBands(ConfigError):
    pass


class UnknownKeyField(ConfigError):
    def __init__(self, key: str, allowed: tuple[str, ...]):
        super().__init__(f"unknown grouping key {key!r}; allowed: {', '.join(allowed)}")
        self.key = key


# --- numeric errors ------------------------------------------------------


class NonFiniteLoss(NumericError):
    def __init__(self, epoch: int, value: float):
        super().__init__(f"training loss became non-finite at epoch {epoch} ({value!r})")
        self.epoch = epoch


class RankDeficientWarning(UserWarning):
    """Requested more components than the data's numerical rank supports."""
