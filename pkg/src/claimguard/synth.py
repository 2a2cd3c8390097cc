"""Seeded synthetic claims corpus with planted fraud schemes.

A configurable share of providers is marked fraudulent and assigned one
scheme each:

* ``duplicate_billing`` — claims arrive as near-identical pairs (same
  beneficiary, codes, dates, and amount; fresh claim id), so the provider
  bills roughly twice per distinct beneficiary.
* ``upcoding`` — reimbursed amounts are inflated to at least 2.5x the
  mean of the clean amount distribution.
* ``phantom_service`` — every claim is dated strictly after the
  beneficiary's date of death, and the provider's claim volume runs well
  above the clean baseline.

Fraudulent providers also draw disproportionately from elderly
beneficiaries, so age-band fraud rates rise with age. Output is
byte-deterministic for a fixed config and seed.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import InvalidConfig
from .ingest import (
    BeneficiaryRecord,
    BeneficiarySchema,
    ClaimRecord,
    ClaimsSchema,
    LabelSchema,
    ProviderLabel,
    Setting,
)

DUPLICATE_BILLING = "duplicate_billing"
UPCODING = "upcoding"
PHANTOM_SERVICE = "phantom_service"
SCHEMES = (DUPLICATE_BILLING, UPCODING, PHANTOM_SERVICE)

# Diagnosis vocabulary; the first three codes carry elevated weight so
# code-level spending summaries have a stable, non-trivial head.
_DIAGNOSIS_CODES = [
    "4019", "4011", "2724", "25000", "V5869", "42731", "2720", "V5861",
    "2449", "4280", "53081", "41401", "496", "2859", "5990", "30000",
    "40390", "5853", "7812", "78079", "V4581", "2722",
]
_DIAGNOSIS_WEIGHTS = np.array(
    [0.11, 0.075, 0.065] + [0.75 / 19] * 19, dtype=np.float64
)
_DIAGNOSIS_WEIGHTS /= _DIAGNOSIS_WEIGHTS.sum()

_PROCEDURE_CODES = [
    "0066", "3893", "4516", "8154", "9904", "3995", "8151", "0040",
    "3722", "8872",
]

_CHRONIC_BASE_P = [0.30, 0.25, 0.20, 0.07, 0.15, 0.20, 0.35, 0.30, 0.12, 0.10, 0.05]

_CLAIM_WINDOW_START = date(2009, 1, 1)
_CLAIM_WINDOW_DAYS = 334  # through 2009-11-30
_DOB_START = date(1920, 1, 1)
_DOB_DAYS = (date(1985, 12, 31) - _DOB_START).days
_ELDERLY_CUTOFF = date(1939, 12, 1)  # age >= 70 at the 2009-12-01 epoch
_DOD_START = date(2009, 1, 15)
_DOD_DAYS = (date(2009, 10, 31) - _DOD_START).days


def _default_scheme_mix() -> dict[str, float]:
    return {DUPLICATE_BILLING: 0.35, UPCODING: 0.35, PHANTOM_SERVICE: 0.30}


@dataclass
class SynthConfig:
    n_providers: int = 100
    n_beneficiaries: int = 400
    n_claims: int = 2000
    fraud_provider_fraction: float = 0.10
    seed: int = 7
    scheme_mix: dict[str, float] = field(default_factory=_default_scheme_mix)
    amount_log_mean: float = 5.7  # log-dollars; median ~ $299
    amount_log_sigma: float = 0.8
    inpatient_share: float = 0.30

    def validate(self) -> None:
        if self.n_providers < 1 or self.n_beneficiaries < 1:
            raise InvalidConfig("need at least one provider and one beneficiary")
        if self.n_claims < self.n_providers:
            raise InvalidConfig("n_claims must be >= n_providers")
        if not 0.0 <= self.fraud_provider_fraction <= 1.0:
            raise InvalidConfig("fraud_provider_fraction must lie in [0, 1]")
        if not 0.0 <= self.inpatient_share <= 1.0:
            raise InvalidConfig("inpatient_share must lie in [0, 1]")
        unknown = set(self.scheme_mix) - set(SCHEMES)
        if unknown:
            raise InvalidConfig(f"unknown schemes in mix: {sorted(unknown)}")
        weights = [self.scheme_mix.get(s, 0.0) for s in SCHEMES]
        if any(w < 0 for w in weights):
            raise InvalidConfig("scheme weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise InvalidConfig(f"scheme weights must sum to 1, got {sum(weights)!r}")
        if self.amount_log_sigma <= 0:
            raise InvalidConfig("amount_log_sigma must be positive")

    def n_fraud_providers(self) -> int:
        return math.floor(self.fraud_provider_fraction * self.n_providers + 0.5)


def clean_mean_dollars(config: SynthConfig) -> float:
    """Mean of the clean (un-inflated) reimbursement distribution."""
    return math.exp(config.amount_log_mean + config.amount_log_sigma**2 / 2)


@dataclass
class SyntheticTables:
    claims_inpatient: list[ClaimRecord]
    claims_outpatient: list[ClaimRecord]
    beneficiaries: list[BeneficiaryRecord]
    labels: list[ProviderLabel]
    schemes: dict[str, str]  # fraud provider id -> scheme name


def generate(config: SynthConfig) -> SyntheticTables:
    config.validate()
    rng = np.random.default_rng(config.seed)

    provider_ids = [f"PRV{i:05d}" for i in range(1, config.n_providers + 1)]
    n_fraud = config.n_fraud_providers()
    fraud_idx = np.sort(rng.choice(config.n_providers, size=n_fraud, replace=False))
    mix = np.array([config.scheme_mix.get(s, 0.0) for s in SCHEMES])
    scheme_of: dict[int, str] = {}
    if n_fraud:
        drawn = rng.choice(len(SCHEMES), size=n_fraud, p=mix / mix.sum())
        for idx, s in zip(fraud_idx, drawn):
            scheme_of[int(idx)] = SCHEMES[int(s)]

    # Claim volume per provider: log-normal size weights.  Phantom mills run
    # hot.  Duplicate billers run busy practices and additionally emit a twin
    # for every drawn claim, so their realised volume lands well above clean.
    weights = rng.lognormal(mean=0.0, sigma=0.25, size=config.n_providers)
    for idx, scheme in scheme_of.items():
        if scheme == PHANTOM_SERVICE:
            weights[idx] *= 3.0
        elif scheme == DUPLICATE_BILLING:
            weights[idx] *= 1.5

    # Per-provider physician pools, ids issued sequentially.
    pools: list[list[str]] = []
    next_phy = 1
    for size in (1 + rng.integers(0, 8, size=config.n_providers)):
        pools.append([f"PHY{j:06d}" for j in range(next_phy, next_phy + int(size))])
        next_phy += int(size)

    beneficiaries = _make_beneficiaries(config, rng)
    elderly_idx = [
        i for i, b in enumerate(beneficiaries) if b.date_of_birth <= _ELDERLY_CUTOFF
    ]
    deceased_idx = [
        i for i, b in enumerate(beneficiaries) if b.date_of_death is not None
    ]
    if scheme_of and not deceased_idx:
        raise InvalidConfig(
            "phantom_service scheme needs deceased beneficiaries; "
            "increase n_beneficiaries"
        )

    provider_draws = rng.choice(
        config.n_providers, size=config.n_claims, p=weights / weights.sum()
    )
    mean_dollars = clean_mean_dollars(config)

    claims: list[ClaimRecord] = []
    next_claim = 1
    for p_idx in provider_draws:
        if len(claims) >= config.n_claims:
            break
        p_idx = int(p_idx)
        scheme = scheme_of.get(p_idx)

        if scheme == PHANTOM_SERVICE:
            b_idx = int(deceased_idx[int(rng.integers(0, len(deceased_idx)))])
        elif scheme is not None and elderly_idx and rng.random() < 0.75:
            b_idx = int(elderly_idx[int(rng.integers(0, len(elderly_idx)))])
        else:
            b_idx = int(rng.integers(0, config.n_beneficiaries))
        bene = beneficiaries[b_idx]

        inpatient = rng.random() < config.inpatient_share
        if scheme == PHANTOM_SERVICE:
            start = bene.date_of_death + timedelta(days=1 + int(rng.integers(0, 60)))
        else:
            start = _CLAIM_WINDOW_START + timedelta(days=int(rng.integers(0, _CLAIM_WINDOW_DAYS)))
        duration = int(3 + rng.integers(0, 12)) if inpatient else int(rng.integers(0, 4))
        end = start + timedelta(days=duration)

        dollars = float(rng.lognormal(config.amount_log_mean, config.amount_log_sigma))
        if scheme == UPCODING:
            dollars = mean_dollars * float(rng.uniform(2.6, 4.0))
            dollars *= float(rng.lognormal(0.0, 0.15))
        reimbursed = int(round(dollars * 100))
        deductible = 106800 if inpatient else int(rng.integers(0, 71)) * 100

        pool = pools[p_idx]
        attending = pool[int(rng.integers(0, len(pool)))]
        operating = (
            pool[int(rng.integers(0, len(pool)))]
            if inpatient and rng.random() < 0.7
            else ""
        )
        other = pool[int(rng.integers(0, len(pool)))] if rng.random() < 0.2 else ""

        n_diag = 1 + min(int(rng.geometric(0.45)) - 1, 5)
        diagnosis = tuple(
            _DIAGNOSIS_CODES[int(i)]
            for i in rng.choice(
                len(_DIAGNOSIS_CODES), size=n_diag, replace=False, p=_DIAGNOSIS_WEIGHTS
            )
        )
        n_proc = int(1 + rng.integers(0, 3)) if inpatient else int(rng.integers(0, 3))
        procedure = tuple(
            _PROCEDURE_CODES[int(i)]
            for i in rng.choice(len(_PROCEDURE_CODES), size=n_proc, replace=False)
        )

        base = ClaimRecord(
            claim_id=f"CLM{next_claim:07d}",
            beneficiary_id=bene.beneficiary_id,
            provider_id=provider_ids[p_idx],
            setting=Setting.INPATIENT if inpatient else Setting.OUTPATIENT,
            claim_start=start,
            claim_end=end,
            admission_date=start if inpatient else None,
            discharge_date=end if inpatient else None,
            reimbursed_cents=reimbursed,
            deductible_cents=deductible,
            attending_physician=attending,
            operating_physician=operating,
            other_physician=other,
            diagnosis_codes=diagnosis,
            procedure_codes=procedure,
        )
        next_claim += 1
        claims.append(base)

        if scheme == DUPLICATE_BILLING and len(claims) < config.n_claims:
            twin = ClaimRecord(
                claim_id=f"CLM{next_claim:07d}",
                beneficiary_id=base.beneficiary_id,
                provider_id=base.provider_id,
                setting=base.setting,
                claim_start=base.claim_start,
                claim_end=base.claim_end,
                admission_date=base.admission_date,
                discharge_date=base.discharge_date,
                reimbursed_cents=base.reimbursed_cents,
                deductible_cents=base.deductible_cents,
                attending_physician=base.attending_physician,
                operating_physician=base.operating_physician,
                other_physician=base.other_physician,
                diagnosis_codes=base.diagnosis_codes,
                procedure_codes=base.procedure_codes,
            )
            next_claim += 1
            claims.append(twin)

    labels = [
        ProviderLabel(provider_id=pid, potential_fraud=(i in scheme_of))
        for i, pid in enumerate(provider_ids)
    ]
    schemes = {provider_ids[i]: scheme_of[i] for i in sorted(scheme_of)}
    return SyntheticTables(
        claims_inpatient=[c for c in claims if c.setting is Setting.INPATIENT],
        claims_outpatient=[c for c in claims if c.setting is Setting.OUTPATIENT],
        beneficiaries=beneficiaries,
        labels=labels,
        schemes=schemes,
    )


def _make_beneficiaries(config: SynthConfig, rng: np.random.Generator) -> list[BeneficiaryRecord]:
    records: list[BeneficiaryRecord] = []
    any_fraud = config.n_fraud_providers() > 0
    forced_death = None
    for i in range(1, config.n_beneficiaries + 1):
        dob = _DOB_START + timedelta(days=int(rng.integers(0, _DOB_DAYS + 1)))
        elderly = dob <= _ELDERLY_CUTOFF
        p_death = 0.15 if elderly else 0.03
        dod = None
        if rng.random() < p_death:
            dod = _DOD_START + timedelta(days=int(rng.integers(0, _DOD_DAYS + 1)))
        gender = "1" if rng.random() < 0.5 else "2"
        race = ["1", "2", "3", "5"][int(rng.choice(4, p=[0.82, 0.10, 0.05, 0.03]))]
        flags = []
        for p in _CHRONIC_BASE_P:
            p_eff = min(0.9, p * 1.4) if elderly else p
            flags.append(1 if rng.random() < p_eff else 0)
        records.append(
            BeneficiaryRecord(
                beneficiary_id=f"BENE{i:06d}",
                date_of_birth=dob,
                date_of_death=dod,
                gender=gender,
                race=race,
                chronic_conditions=tuple(flags),
                annual_ip_reimbursement_cents=int(rng.integers(0, 60)) * 10000,
                annual_ip_deductible_cents=int(rng.integers(0, 12)) * 10000,
                annual_op_reimbursement_cents=int(rng.integers(0, 40)) * 5000,
                annual_op_deductible_cents=int(rng.integers(0, 15)) * 2000,
            )
        )
        if dod is not None and forced_death is None:
            forced_death = i - 1
    # Phantom providers need at least one deceased beneficiary to bill.
    if any_fraud and forced_death is None and records:
        first = records[0]
        records[0] = BeneficiaryRecord(
            beneficiary_id=first.beneficiary_id,
            date_of_birth=first.date_of_birth,
            date_of_death=_DOD_START,
            gender=first.gender,
            race=first.race,
            chronic_conditions=first.chronic_conditions,
            annual_ip_reimbursement_cents=first.annual_ip_reimbursement_cents,
            annual_ip_deductible_cents=first.annual_ip_deductible_cents,
            annual_op_reimbursement_cents=first.annual_op_reimbursement_cents,
            annual_op_deductible_cents=first.annual_op_deductible_cents,
        )
    return records


# --- CSV corpus -----------------------------------------------------------


def _fmt_cents(cents: int) -> str:
    return f"{cents // 100}.{cents % 100:02d}"


def write_corpus(
    tables: SyntheticTables,
    out_dir: str | os.PathLike,
    beneficiary_schema: BeneficiarySchema = BeneficiarySchema(),
    claims_schema: ClaimsSchema = ClaimsSchema(),
    label_schema: LabelSchema = LabelSchema(),
) -> dict[str, str]:
    """Write the four CSV files the ingest parsers consume.

    Chronic flags are written in the source encoding (1 present,
    2 absent). Returns the written paths keyed by table name.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "beneficiaries": os.path.join(out_dir, "beneficiaries.csv"),
        "inpatient": os.path.join(out_dir, "inpatient.csv"),
        "outpatient": os.path.join(out_dir, "outpatient.csv"),
        "labels": os.path.join(out_dir, "labels.csv"),
    }

    with open(paths["beneficiaries"], "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(beneficiary_schema.required_columns())
        for b in tables.beneficiaries:
            writer.writerow(
                [
                    b.beneficiary_id,
                    b.date_of_birth.isoformat(),
                    b.date_of_death.isoformat() if b.date_of_death else "",
                    b.gender,
                    b.race,
                    _fmt_cents(b.annual_ip_reimbursement_cents),
                    _fmt_cents(b.annual_ip_deductible_cents),
                    _fmt_cents(b.annual_op_reimbursement_cents),
                    _fmt_cents(b.annual_op_deductible_cents),
                ]
                + [1 if f else 2 for f in b.chronic_conditions]
            )

    for key, setting, claims in (
        ("inpatient", Setting.INPATIENT, tables.claims_inpatient),
        ("outpatient", Setting.OUTPATIENT, tables.claims_outpatient),
    ):
        columns = claims_schema.required_columns(setting)
        with open(paths[key], "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for c in claims:
                row = {
                    claims_schema.claim_id: c.claim_id,
                    claims_schema.beneficiary_id: c.beneficiary_id,
                    claims_schema.provider_id: c.provider_id,
                    claims_schema.claim_start: c.claim_start.isoformat(),
                    claims_schema.claim_end: c.claim_end.isoformat(),
                    claims_schema.reimbursed: _fmt_cents(c.reimbursed_cents),
                    claims_schema.deductible: _fmt_cents(c.deductible_cents),
                    claims_schema.attending: c.attending_physician,
                    claims_schema.operating: c.operating_physician,
                    claims_schema.other: c.other_physician,
                }
                if setting is Setting.INPATIENT:
                    row[claims_schema.admission_date] = c.admission_date.isoformat()
                    row[claims_schema.discharge_date] = c.discharge_date.isoformat()
                for i, col in enumerate(claims_schema.diagnosis_columns()):
                    row[col] = c.diagnosis_codes[i] if i < len(c.diagnosis_codes) else ""
                for i, col in enumerate(claims_schema.procedure_columns()):
                    row[col] = c.procedure_codes[i] if i < len(c.procedure_codes) else ""
                writer.writerow([row[col] for col in columns])

    with open(paths["labels"], "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([label_schema.provider_id, label_schema.potential_fraud])
        for label in tables.labels:
            writer.writerow([label.provider_id, "Yes" if label.potential_fraud else "No"])

    return paths
