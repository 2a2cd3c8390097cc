"""Shared fixtures: a small deterministic synthetic corpus and hand-built
record helpers used across the test modules."""

from __future__ import annotations

from datetime import date

import pytest

from claimguard.ingest import (
    BeneficiaryRecord,
    ClaimRecord,
    ProviderLabel,
    Setting,
    merge_dataset,
)
from claimguard.synth import SynthConfig, generate

N_CHRONIC = 11


@pytest.fixture(scope="session")
def small_config() -> SynthConfig:
    return SynthConfig(
        n_providers=40,
        n_beneficiaries=160,
        n_claims=900,
        fraud_provider_fraction=0.15,
        seed=11,
    )


@pytest.fixture(scope="session")
def small_tables(small_config):
    return generate(small_config)


@pytest.fixture(scope="session")
def small_dataset(small_tables):
    return merge_dataset(
        small_tables.claims_inpatient,
        small_tables.claims_outpatient,
        small_tables.beneficiaries,
        small_tables.labels,
    )


def make_beneficiary(
    beneficiary_id: str = "BENE0001",
    date_of_birth: date = date(1940, 1, 1),
    date_of_death: date | None = None,
    chronic: tuple[int, ...] | None = None,
) -> BeneficiaryRecord:
    return BeneficiaryRecord(
        beneficiary_id=beneficiary_id,
        date_of_birth=date_of_birth,
        date_of_death=date_of_death,
        gender="1",
        race="1",
        chronic_conditions=chronic if chronic is not None else (0,) * N_CHRONIC,
        annual_ip_reimbursement_cents=0,
        annual_ip_deductible_cents=0,
        annual_op_reimbursement_cents=0,
        annual_op_deductible_cents=0,
    )


def make_claim(
    claim_id: str = "CLM0001",
    beneficiary_id: str = "BENE0001",
    provider_id: str = "PRV001",
    setting: Setting = Setting.OUTPATIENT,
    claim_start: date = date(2009, 3, 1),
    claim_end: date = date(2009, 3, 3),
    reimbursed_cents: int = 10000,
    deductible_cents: int = 0,
    attending: str = "PHY000001",
    diagnosis: tuple[str, ...] = ("4019",),
    procedure: tuple[str, ...] = (),
) -> ClaimRecord:
    inpatient = setting is Setting.INPATIENT
    return ClaimRecord(
        claim_id=claim_id,
        beneficiary_id=beneficiary_id,
        provider_id=provider_id,
        setting=setting,
        claim_start=claim_start,
        claim_end=claim_end,
        admission_date=claim_start if inpatient else None,
        discharge_date=claim_end if inpatient else None,
        reimbursed_cents=reimbursed_cents,
        deductible_cents=deductible_cents,
        attending_physician=attending,
        operating_physician="",
        other_physician="",
        diagnosis_codes=diagnosis,
        procedure_codes=procedure,
    )


def make_dataset(claims, beneficiaries, labels):
    """Merge hand-built records into a dataset (split by claim setting)."""
    ip = [c for c in claims if c.setting is Setting.INPATIENT]
    op = [c for c in claims if c.setting is Setting.OUTPATIENT]
    return merge_dataset(ip, op, beneficiaries, labels)


def label(provider_id: str, fraud: bool = False) -> ProviderLabel:
    return ProviderLabel(provider_id=provider_id, potential_fraud=fraud)
