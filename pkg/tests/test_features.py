"""Feature engineering: ages, standardization, the two analysis units,
sparse code encoding, grouping, and the dataset summaries."""

from __future__ import annotations

import json
from datetime import date

import numpy as np
import pytest

from claimguard.errors import (
    EmptyDataset,
    NonMonotoneBands,
    ReferenceBeforeBirth,
    UnknownKeyField,
)
from claimguard.features import (
    DEFAULT_EPOCH,
    PROVIDER_AGGREGATES,
    UNIT_CLAIM,
    UNIT_PROVIDER,
    age_band_fraud_rates,
    build_features,
    claim_volume_outliers,
    compute_age,
    destandardize_columns,
    fraud_proportion,
    group_by_similarity,
    sparse_encode_codes,
    standardize_columns,
    top_codes_by_amount,
)
from claimguard.ingest import CHRONIC_CONDITIONS, Setting

from conftest import label, make_beneficiary, make_claim, make_dataset


# --- ages ------------------------------------------------------------------


def test_age_is_completed_years():
    assert compute_age(date(1940, 1, 1), date(2009, 12, 1)) == 69


def test_age_counts_unreached_birthday():
    assert compute_age(date(1930, 5, 10), date(2008, 5, 9)) == 77


def test_age_on_birthday_is_exact():
    assert compute_age(date(1930, 5, 10), date(2008, 5, 10)) == 78


def test_age_rejects_reference_before_birth():
    with pytest.raises(ReferenceBeforeBirth):
        compute_age(date(1940, 1, 1), date(1939, 12, 31))


# --- standardization ---------------------------------------------------------


def test_standardize_small_column():
    values = np.array([[1.0], [2.0], [3.0]])
    standardized, params = standardize_columns(values)
    expected = 1.2247448713915890
    assert standardized[:, 0] == pytest.approx([-expected, 0.0, expected], abs=1e-15)
    assert params == [(2.0, pytest.approx(np.sqrt(2.0 / 3.0)))]


def test_standardize_constant_column_records_unit_std():
    values = np.array([[5.0], [5.0], [5.0]])
    standardized, params = standardize_columns(values)
    assert np.all(standardized == 0.0)
    assert params == [(5.0, 1.0)]


def test_destandardize_inverts():
    rng = np.random.default_rng(0)
    values = rng.normal(size=(20, 4))
    standardized, params = standardize_columns(values)
    assert destandardize_columns(standardized, params) == pytest.approx(values)


# --- feature matrices -----------------------------------------------------------


def two_provider_dataset():
    bene = [
        make_beneficiary("BENE0001", date(1940, 1, 1)),
        make_beneficiary("BENE0002", date(1980, 6, 15)),
    ]
    claims = [
        make_claim("CLM0001", "BENE0001", "PRV001", Setting.INPATIENT,
                   claim_start=date(2009, 3, 1), claim_end=date(2009, 3, 5),
                   reimbursed_cents=100_00),
        make_claim("CLM0002", "BENE0002", "PRV001",
                   reimbursed_cents=300_00, attending="PHY000002"),
        make_claim("CLM0003", "BENE0002", "PRV002",
                   reimbursed_cents=200_00, diagnosis=("25000",)),
    ]
    return make_dataset(claims, bene, [label("PRV001", True), label("PRV002")])


def test_claim_unit_matrix_shape(small_dataset):
    fm = build_features(small_dataset, unit=UNIT_CLAIM)
    assert fm.n_rows == len(small_dataset.rows)
    assert fm.n_features == 28
    assert fm.unit == UNIT_CLAIM
    assert fm.column_names[:6] == [
        "age",
        "claim_duration_days",
        "admission_duration_days",
        "has_admission",
        "reimbursed_amount",
        "deductible_paid",
    ]
    assert fm.column_names[6:17] == [f"chronic_{c}" for c in CHRONIC_CONDITIONS]
    assert fm.column_names[-8:] == [f"provider_{a}" for a in PROVIDER_AGGREGATES]
    assert len(fm.row_providers) == fm.n_rows
    assert len(set(fm.row_ids)) == fm.n_rows


def test_provider_unit_matrix_is_one_row_per_provider(small_dataset):
    fm = build_features(small_dataset, unit=UNIT_PROVIDER)
    providers = {r.claim.provider_id for r in small_dataset.rows}
    assert fm.n_rows == len(providers)
    assert fm.column_names == PROVIDER_AGGREGATES
    assert fm.row_providers == sorted(providers)


def test_provider_aggregates_values():
    dataset = two_provider_dataset()
    fm = build_features(dataset, unit=UNIT_PROVIDER, standardize=False)
    assert fm.row_providers == ["PRV001", "PRV002"]
    row = dict(zip(fm.column_names, fm.values[0]))
    assert row["claim_count"] == 2.0
    assert row["distinct_beneficiaries"] == 2.0
    assert row["distinct_attending_physicians"] == 2.0
    assert row["reimbursed_sum"] == 400.0
    assert row["reimbursed_mean"] == 200.0
    assert row["reimbursed_max"] == 300.0
    assert row["mean_claim_duration"] == 3.0  # (4 + 2) / 2
    assert row["inpatient_share"] == 0.5
    assert fm.target.tolist() == [1, 0]


def test_claim_unit_age_uses_death_date_when_present():
    bene = [
        make_beneficiary("BENE0001", date(1940, 1, 1), date_of_death=date(2000, 1, 1)),
    ]
    claims = [make_claim("CLM0001", "BENE0001", "PRV001"),
              make_claim("CLM0002", "BENE0001", "PRV001")]
    dataset = make_dataset(claims, bene, [label("PRV001")])
    fm = build_features(dataset, unit=UNIT_CLAIM, standardize=False)
    age = fm.values[0][fm.column_names.index("age")]
    assert age == 60.0  # death date caps the age, not the epoch


def test_standardized_matrix_has_zero_column_means(small_dataset):
    fm = build_features(small_dataset, unit=UNIT_CLAIM)
    assert fm.values.mean(axis=0) == pytest.approx(np.zeros(fm.n_features), abs=1e-9)
    assert fm.standardization is not None


def test_build_features_rejects_unknown_unit(small_dataset):
    with pytest.raises(UnknownKeyField):
        build_features(small_dataset, unit="physician")


def test_subset_keeps_alignment(small_dataset):
    fm = build_features(small_dataset, unit=UNIT_CLAIM)
    mask = fm.target == 1
    sub = fm.subset(mask)
    assert sub.n_rows == int(mask.sum())
    assert np.all(sub.target == 1)
    assert sub.column_names == fm.column_names


def test_matrix_csv_and_sidecar(small_dataset, tmp_path):
    fm = build_features(small_dataset, unit=UNIT_PROVIDER)
    csv_path = tmp_path / "matrix.csv"
    sidecar_path = tmp_path / "matrix.meta.json"
    fm.to_csv(csv_path)
    fm.write_sidecar(sidecar_path)
    header = csv_path.read_text().splitlines()[0].split(",")
    assert header == fm.column_names + ["target"]
    meta = json.loads(sidecar_path.read_text())
    assert meta["unit"] == UNIT_PROVIDER
    assert len(meta["standardization"]) == fm.n_features


# --- sparse codes ---------------------------------------------------------------


def test_sparse_encoding_dedupes_and_sorts():
    bene = [make_beneficiary("BENE0001")]
    claims = [
        make_claim("CLM0001", diagnosis=("4019",)),
        make_claim("CLM0002", diagnosis=("25000", "4019", "25000")),
    ]
    dataset = make_dataset(claims, bene, [label("PRV001")])
    sparse = sparse_encode_codes(dataset, field="diagnosis")
    assert sparse.code_vocabulary == ["25000", "4019"]
    assert sparse.entries == [(0, 1, 1), (1, 0, 1), (1, 1, 1)]


def test_sparse_encoding_rejects_unknown_field(small_dataset):
    with pytest.raises(UnknownKeyField):
        sparse_encode_codes(small_dataset, field="modifier")


def test_sparse_density_is_low_on_corpus(small_dataset):
    sparse = sparse_encode_codes(small_dataset)
    assert 0.0 < sparse.density < 0.2


# --- grouping -------------------------------------------------------------------


def test_grouping_partition_is_exhaustive_and_disjoint(small_dataset):
    groups = group_by_similarity(small_dataset, ["provider_id"])
    seen = [i for g in groups for i in g.row_indices]
    assert sorted(seen) == list(range(len(small_dataset.rows)))
    assert len(seen) == len(set(seen))


def test_grouping_orders_by_descending_variance():
    bene = [make_beneficiary("BENE0001")]
    claims = [
        # provider A: amounts 100, 300 -> population variance 10000
        make_claim("CLM0001", provider_id="PRV00A", reimbursed_cents=100_00),
        make_claim("CLM0002", provider_id="PRV00A", reimbursed_cents=300_00),
        # provider B: constant amounts -> variance 0
        make_claim("CLM0003", provider_id="PRV00B", reimbursed_cents=150_00),
        make_claim("CLM0004", provider_id="PRV00B", reimbursed_cents=150_00),
    ]
    labels = [label("PRV00A"), label("PRV00B")]
    dataset = make_dataset(claims, bene, labels)
    groups = group_by_similarity(dataset, ["provider_id"])
    assert [g.key for g in groups] == [("PRV00A",), ("PRV00B",)]
    assert groups[0].amount_variance == 10000.0
    assert groups[1].amount_variance == 0.0


def test_grouping_single_key_value_yields_one_group():
    bene = [make_beneficiary("BENE0001")]
    claims = [make_claim("CLM0001"), make_claim("CLM0002")]
    dataset = make_dataset(claims, bene, [label("PRV001")])
    groups = group_by_similarity(dataset, ["provider_id"])
    assert len(groups) == 1
    assert groups[0].row_indices == [0, 1]


def test_grouping_rejects_unknown_key(small_dataset):
    with pytest.raises(UnknownKeyField):
        group_by_similarity(small_dataset, ["zip_code"])


# --- summaries -------------------------------------------------------------------


def test_fraud_proportion_sums_to_hundred(small_dataset):
    clean_pct, fraud_pct = fraud_proportion(small_dataset)
    assert clean_pct + fraud_pct == pytest.approx(100.0)
    assert 0.0 < fraud_pct < 100.0


def test_top_codes_count_money_once_per_distinct_code():
    bene = [make_beneficiary("BENE0001")]
    claims = [
        make_claim("CLM0001", reimbursed_cents=100_00, diagnosis=("4019", "4019", "25000")),
        make_claim("CLM0002", reimbursed_cents=50_00, diagnosis=("25000",)),
    ]
    dataset = make_dataset(claims, bene, [label("PRV001", True)])
    spends = top_codes_by_amount(dataset, k=10)
    by_code = {s.code: s for s in spends}
    assert by_code["4019"].total_cents == 100_00  # repeated listing counts once
    assert by_code["25000"].total_cents == 150_00
    assert spends[0].code == "25000"
    assert by_code["4019"].fraud_claims == 1
    assert by_code["4019"].nonfraud_claims == 0


def test_top_codes_breaks_ties_lexicographically():
    bene = [make_beneficiary("BENE0001")]
    claims = [
        make_claim("CLM0001", reimbursed_cents=100_00, diagnosis=("B",)),
        make_claim("CLM0002", reimbursed_cents=100_00, diagnosis=("A",)),
    ]
    dataset = make_dataset(claims, bene, [label("PRV001")])
    assert [s.code for s in top_codes_by_amount(dataset)] == ["A", "B"]


def test_age_bands_default_edges(small_dataset):
    bands = age_band_fraud_rates(small_dataset)
    assert [(b.lower, b.upper) for b in bands] == [(0, 30), (30, 70), (70, None)]
    assert sum(b.n_claims for b in bands) == len(small_dataset.rows)
    for band in bands:
        assert 0.0 <= band.fraud_rate <= 1.0
        assert band.empty == (band.n_claims == 0)


def test_age_bands_reject_non_increasing_edges(small_dataset):
    with pytest.raises(NonMonotoneBands):
        age_band_fraud_rates(small_dataset, band_edges=[0, 50, 50])


def test_volume_outlier_flags_extreme_provider():
    bene = [make_beneficiary("BENE0001")]
    claims = [
        make_claim(f"CLM{i:04d}", provider_id=f"PRV{i:03d}") for i in range(12)
    ]
    claims += [
        make_claim(f"CLMX{i:04d}", provider_id="PRV_BUSY") for i in range(40)
    ]
    labels = [label(f"PRV{i:03d}") for i in range(12)] + [label("PRV_BUSY", True)]
    dataset = make_dataset(claims, bene, labels)
    outliers = claim_volume_outliers(dataset)
    assert outliers == [{"provider_id": "PRV_BUSY", "claim_count": 40}]
