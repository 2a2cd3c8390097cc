"""Feature engineering over a merged claims dataset.

Two analysis units are supported. ``claim`` builds one row per claim
(demographics, durations, amounts, chronic flags, code counts, setting)
with that claim's provider-level aggregates attached. ``provider``
collapses to one row per provider holding just the aggregates. Either
way the matrix is standardized column-wise (population standard
deviation; constant columns are recorded with deviation 1 and left
centred) and the parameters are kept so values can be mapped back.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import (
    EmptyDataset,
    NonMonotoneBands,
    ReferenceBeforeBirth,
    UnknownKeyField,
)
from .ingest import CHRONIC_CONDITIONS, MergedDataset, MergedRow, Setting

UNIT_CLAIM = "claim"
UNIT_PROVIDER = "provider"

DEFAULT_EPOCH = date(2009, 12, 1)

PROVIDER_AGGREGATES = [
    "claim_count",
    "distinct_beneficiaries",
    "distinct_attending_physicians",
    "reimbursed_sum",
    "reimbursed_mean",
    "reimbursed_max",
    "mean_claim_duration",
    "inpatient_share",
]


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (n, d) float64, standardized when params present
    column_names: list[str]
    target: np.ndarray  # (n,) int, 1 = fraud
    unit: str
    standardization: list[tuple[float, float]] | None  # per-column (mean, std)
    row_providers: list[str]
    row_ids: list[str]

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.values.shape[1])

    def subset(self, mask: np.ndarray) -> "FeatureMatrix":
        idx = np.flatnonzero(mask)
        return FeatureMatrix(
            values=self.values[idx],
            column_names=list(self.column_names),
            target=self.target[idx],
            unit=self.unit,
            standardization=self.standardization,
            row_providers=[self.row_providers[i] for i in idx],
            row_ids=[self.row_ids[i] for i in idx],
        )

    def to_csv(self, path: str | os.PathLike) -> None:
        """Header = column names plus trailing target."""
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.column_names + ["target"])
            for row, t in zip(self.values, self.target):
                writer.writerow([repr(float(v)) for v in row] + [int(t)])

    def write_sidecar(self, path: str | os.PathLike) -> None:
        """JSON sidecar holding the standardization parameters."""
        payload = {
            "unit": self.unit,
            "columns": self.column_names,
            "standardization": (
                None
                if self.standardization is None
                else [{"mean": m, "std": s} for m, s in self.standardization]
            ),
        }
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)


def compute_age(date_of_birth: date, reference: date) -> int:
    """Completed calendar years between birth and the reference date."""
    if reference < date_of_birth:
        raise ReferenceBeforeBirth(
            f"reference {reference.isoformat()} precedes birth "
            f"{date_of_birth.isoformat()}"
        )
    age = reference.year - date_of_birth.year
    if (reference.month, reference.day) < (date_of_birth.month, date_of_birth.day):
        age -= 1
    return age


def standardize_columns(values: np.ndarray) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Centre and scale each column by its population standard deviation.

    Constant columns get deviation 1 recorded, so they standardize to
    exactly zero instead of NaN.
    """
    means = values.mean(axis=0)
    stds = values.std(axis=0)  # population (ddof=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    standardized = (values - means) / stds
    params = [(float(m), float(s)) for m, s in zip(means, stds)]
    return standardized, params


def destandardize_columns(
    values: np.ndarray, params: list[tuple[float, float]]
) -> np.ndarray:
    means = np.array([m for m, _ in params])
    stds = np.array([s for _, s in params])
    return values * stds + means


def _row_age(row: MergedRow, epoch: date) -> int:
    reference = row.beneficiary.date_of_death or epoch
    return compute_age(row.beneficiary.date_of_birth, reference)


def _provider_aggregates(rows: list[MergedRow]) -> dict[str, list[float]]:
    """Aggregate per provider; returns {provider_id: 8 aggregate values}
    aligned with PROVIDER_AGGREGATES."""
    by_provider: dict[str, list[MergedRow]] = {}
    for row in rows:
        by_provider.setdefault(row.claim.provider_id, []).append(row)
    out: dict[str, list[float]] = {}
    for pid in sorted(by_provider):
        group = by_provider[pid]
        amounts = [r.claim.reimbursed_cents / 100.0 for r in group]
        durations = [(r.claim.claim_end - r.claim.claim_start).days for r in group]
        n_ip = sum(1 for r in group if r.claim.setting is Setting.INPATIENT)
        physicians = {
            r.claim.attending_physician for r in group if r.claim.attending_physician
        }
        out[pid] = [
            float(len(group)),
            float(len({r.claim.beneficiary_id for r in group})),
            float(len(physicians)),
            float(sum(amounts)),
            float(sum(amounts) / len(group)),
            float(max(amounts)),
            float(sum(durations) / len(group)),
            float(n_ip / len(group)),
        ]
    return out


def build_features(
    dataset: MergedDataset,
    unit: str = UNIT_CLAIM,
    epoch: date = DEFAULT_EPOCH,
    standardize: bool = True,
) -> FeatureMatrix:
    if unit not in (UNIT_CLAIM, UNIT_PROVIDER):
        raise UnknownKeyField(unit, (UNIT_CLAIM, UNIT_PROVIDER))
    if not dataset.rows:
        raise EmptyDataset("cannot build features from an empty dataset")

    aggregates = _provider_aggregates(dataset.rows)

    if unit == UNIT_PROVIDER:
        column_names = list(PROVIDER_AGGREGATES)
        provider_ids = sorted(aggregates)
        label_of: dict[str, int] = {}
        for row in dataset.rows:
            label_of[row.claim.provider_id] = int(row.potential_fraud)
        values = np.array([aggregates[pid] for pid in provider_ids], dtype=np.float64)
        target = np.array([label_of[pid] for pid in provider_ids], dtype=np.int64)
        row_providers = provider_ids
        row_ids = provider_ids
    else:
        column_names = (
            [
                "age",
                "claim_duration_days",
                "admission_duration_days",
                "has_admission",
                "reimbursed_amount",
                "deductible_paid",
            ]
            + [f"chronic_{name}" for name in CHRONIC_CONDITIONS]
            + ["n_diagnosis_codes", "n_procedure_codes", "is_inpatient"]
            + [f"provider_{name}" for name in PROVIDER_AGGREGATES]
        )
        values = np.empty((len(dataset.rows), len(column_names)), dtype=np.float64)
        target = np.empty(len(dataset.rows), dtype=np.int64)
        row_providers = []
        row_ids = []
        for i, row in enumerate(dataset.rows):
            claim = row.claim
            has_admission = claim.admission_date is not None
            admission_days = (
                (claim.discharge_date - claim.admission_date).days if has_admission else 0
            )
            base = [
                float(_row_age(row, epoch)),
                float((claim.claim_end - claim.claim_start).days),
                float(admission_days),
                float(has_admission),
                claim.reimbursed_cents / 100.0,
                claim.deductible_cents / 100.0,
            ]
            base.extend(float(f) for f in row.beneficiary.chronic_conditions)
            base.extend(
                [
                    float(len(claim.diagnosis_codes)),
                    float(len(claim.procedure_codes)),
                    float(claim.setting is Setting.INPATIENT),
                ]
            )
            base.extend(aggregates[claim.provider_id])
            values[i] = base
            target[i] = int(row.potential_fraud)
            row_providers.append(claim.provider_id)
            row_ids.append(claim.claim_id)

    params = None
    if standardize:
        values, params = standardize_columns(values)
    if not np.all(np.isfinite(values)):
        raise EmptyDataset("feature matrix contains non-finite values")
    return FeatureMatrix(
        values=values,
        column_names=column_names,
        target=target,
        unit=unit,
        standardization=params,
        row_providers=row_providers,
        row_ids=row_ids,
    )


# --- sparse code encoding --------------------------------------------------


@dataclass
class SparseCodeMatrix:
    n_rows: int
    code_vocabulary: list[str]  # sorted
    entries: list[tuple[int, int, int]]  # (row, column, 1), deduplicated

    @property
    def density(self) -> float:
        cells = self.n_rows * len(self.code_vocabulary)
        return len(self.entries) / cells if cells else 0.0


def sparse_encode_codes(dataset: MergedDataset, field: str = "diagnosis") -> SparseCodeMatrix:
    """One-hot encode diagnosis or procedure codes as (row, column, 1)
    triples; a code repeated within one claim yields a single entry."""
    if field == "diagnosis":
        pick = lambda c: c.diagnosis_codes  # noqa: E731
    elif field == "procedure":
        pick = lambda c: c.procedure_codes  # noqa: E731
    else:
        raise UnknownKeyField(field, ("diagnosis", "procedure"))
    vocab = sorted({code for row in dataset.rows for code in pick(row.claim)})
    col_of = {code: j for j, code in enumerate(vocab)}
    entries: list[tuple[int, int, int]] = []
    for i, row in enumerate(dataset.rows):
        for j in sorted({col_of[code] for code in pick(row.claim)}):
            entries.append((i, j, 1))
    return SparseCodeMatrix(
        n_rows=len(dataset.rows), code_vocabulary=vocab, entries=entries
    )


# --- grouping and EDA summaries ---------------------------------------------

_GROUP_KEYS = ("provider_id", "attending_physician", "first_diagnosis", "first_procedure")


def _group_key_value(row: MergedRow, key: str) -> str:
    claim = row.claim
    if key == "provider_id":
        return claim.provider_id
    if key == "attending_physician":
        return claim.attending_physician
    if key == "first_diagnosis":
        return claim.diagnosis_codes[0] if claim.diagnosis_codes else ""
    if key == "first_procedure":
        return claim.procedure_codes[0] if claim.procedure_codes else ""
    raise UnknownKeyField(key, _GROUP_KEYS)


@dataclass
class GroupStat:
    key: tuple[str, ...]
    row_indices: list[int]
    amount_variance: float  # population variance of reimbursed dollars


def group_by_similarity(dataset: MergedDataset, keys: list[str]) -> list[GroupStat]:
    """Group claims sharing the given key fields and rank the groups by
    population variance of the reimbursed amount, highest first (ties
    broken by key)."""
    for key in keys:
        if key not in _GROUP_KEYS:
            raise UnknownKeyField(key, _GROUP_KEYS)
    groups: dict[tuple[str, ...], list[int]] = {}
    for i, row in enumerate(dataset.rows):
        value = tuple(_group_key_value(row, key) for key in keys)
        groups.setdefault(value, []).append(i)
    stats = []
    for value in groups:
        idx = groups[value]
        amounts = np.array(
            [dataset.rows[i].claim.reimbursed_cents / 100.0 for i in idx]
        )
        stats.append(
            GroupStat(
                key=value,
                row_indices=idx,
                amount_variance=float(amounts.var()),  # ddof=0
            )
        )
    stats.sort(key=lambda g: (-g.amount_variance, g.key))
    return stats


def fraud_proportion(dataset: MergedDataset) -> tuple[float, float]:
    """Percentage of claims labelled (non-fraud, fraud); sums to 100."""
    if not dataset.rows:
        raise EmptyDataset("no rows to summarize")
    n = len(dataset.rows)
    n_fraud = sum(1 for r in dataset.rows if r.potential_fraud)
    return (100.0 * (n - n_fraud) / n, 100.0 * n_fraud / n)


@dataclass
class CodeSpend:
    code: str
    total_cents: int
    fraud_claims: int
    nonfraud_claims: int

    @property
    def total_dollars(self) -> float:
        return self.total_cents / 100.0


def top_codes_by_amount(dataset: MergedDataset, k: int = 10) -> list[CodeSpend]:
    """Diagnosis codes ranked by total reimbursed money involved.

    A claim contributes its full reimbursed amount to every distinct
    diagnosis code it lists. Ties rank lexicographically by code.
    """
    totals: dict[str, int] = {}
    fraud_counts: dict[str, int] = {}
    clean_counts: dict[str, int] = {}
    for row in dataset.rows:
        for code in set(row.claim.diagnosis_codes):
            totals[code] = totals.get(code, 0) + row.claim.reimbursed_cents
            if row.potential_fraud:
                fraud_counts[code] = fraud_counts.get(code, 0) + 1
            else:
                clean_counts[code] = clean_counts.get(code, 0) + 1
    ranked = sorted(totals, key=lambda c: (-totals[c], c))
    return [
        CodeSpend(
            code=code,
            total_cents=totals[code],
            fraud_claims=fraud_counts.get(code, 0),
            nonfraud_claims=clean_counts.get(code, 0),
        )
        for code in ranked[:k]
    ]


@dataclass
class AgeBand:
    lower: int
    upper: int | None  # None = open-ended
    n_claims: int
    fraud_rate: float
    empty: bool


def age_band_fraud_rates(
    dataset: MergedDataset,
    band_edges: list[int] | None = None,
    epoch: date = DEFAULT_EPOCH,
) -> list[AgeBand]:
    """Fraud rate of claims per age band; default bands [0,30), [30,70),
    [70, inf). Edges must increase strictly."""
    edges = [0, 30, 70] if band_edges is None else list(band_edges)
    if len(edges) < 1 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise NonMonotoneBands(f"band edges must increase strictly, got {edges}")
    bands: list[AgeBand] = []
    bounds = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    bounds.append((edges[-1], None))
    counts = [0] * len(bounds)
    frauds = [0] * len(bounds)
    for row in dataset.rows:
        age = _row_age(row, epoch)
        for b, (lo, hi) in enumerate(bounds):
            if age >= lo and (hi is None or age < hi):
                counts[b] += 1
                frauds[b] += int(row.potential_fraud)
                break
    for (lo, hi), n, f in zip(bounds, counts, frauds):
        bands.append(
            AgeBand(
                lower=lo,
                upper=hi,
                n_claims=n,
                fraud_rate=(f / n) if n else 0.0,
                empty=(n == 0),
            )
        )
    return bands


def claim_volume_outliers(dataset: MergedDataset) -> list[dict]:
    """Providers whose claim count exceeds mean + 3 population std."""
    counts: dict[str, int] = {}
    for row in dataset.rows:
        counts[row.claim.provider_id] = counts.get(row.claim.provider_id, 0) + 1
    values = np.array([counts[p] for p in sorted(counts)], dtype=np.float64)
    cut = values.mean() + 3.0 * values.std()
    return [
        {"provider_id": pid, "claim_count": counts[pid]}
        for pid in sorted(counts)
        if counts[pid] > cut
    ]
