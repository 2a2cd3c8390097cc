"""Four-table claims ingest: beneficiaries, inpatient claims, outpatient
claims, and per-provider fraud labels.

Parsers are strict: the first malformed row raises a typed error carrying
the 1-based data-row number, so bad inputs fail loudly instead of leaking
into the model. Column names default to the public dataset's headers and
can be overridden through the schema dataclasses.

Money is held as integer cents throughout to keep aggregation exact;
dates must be YYYY-MM-DD. Chronic-condition flags arrive as 1 (present) /
2 (absent) in the source data and are normalised to 1/0.
"""

from __future__ import annotations

import csv
import enum
import io
import os
from dataclasses import dataclass, field, fields
from datetime import date
from decimal import Decimal, InvalidOperation
from typing import IO, Iterable

from .errors import (
    DuplicateKey,
    EmptyJoinResult,
    InvalidDateOrder,
    MissingColumn,
    NegativeAmount,
    UnknownFlagValue,
    UnparseableAmount,
    UnparseableDate,
)

# Canonical order of the eleven chronic-condition indicator flags. Every
# chronic_conditions tuple in a BeneficiaryRecord is aligned with this.
CHRONIC_CONDITIONS = (
    "alzheimer",
    "heart_failure",
    "kidney_disease",
    "cancer",
    "obstructive_pulmonary",
    "depression",
    "diabetes",
    "ischemic_heart",
    "osteoporosis",
    "rheumatoid_arthritis",
    "stroke",
)


class Setting(str, enum.Enum):
    INPATIENT = "Inpatient"
    OUTPATIENT = "Outpatient"


# --- record types --------------------------------------------------------


@dataclass(frozen=True, slots=True)
class BeneficiaryRecord:
    beneficiary_id: str
    date_of_birth: date
    date_of_death: date | None
    gender: str
    race: str
    chronic_conditions: tuple[int, ...]  # aligned with CHRONIC_CONDITIONS
    annual_ip_reimbursement_cents: int
    annual_ip_deductible_cents: int
    annual_op_reimbursement_cents: int
    annual_op_deductible_cents: int


@dataclass(frozen=True, slots=True)
class ClaimRecord:
    claim_id: str
    beneficiary_id: str
    provider_id: str
    setting: Setting
    claim_start: date
    claim_end: date
    admission_date: date | None
    discharge_date: date | None
    reimbursed_cents: int
    deductible_cents: int
    attending_physician: str
    operating_physician: str
    other_physician: str
    diagnosis_codes: tuple[str, ...]  # up to 10, blanks compacted
    procedure_codes: tuple[str, ...]  # up to 6, blanks compacted


@dataclass(frozen=True, slots=True)
class ProviderLabel:
    provider_id: str
    potential_fraud: bool


@dataclass(frozen=True, slots=True)
class MergedRow:
    claim: ClaimRecord
    beneficiary: BeneficiaryRecord
    potential_fraud: bool


@dataclass(frozen=True, slots=True)
class SourceCounts:
    """Row counts of the merged dataset: claims by setting plus distinct
    beneficiary and provider counts among the surviving rows."""

    n_inpatient: int
    n_outpatient: int
    n_beneficiaries: int
    n_providers: int


@dataclass(frozen=True, slots=True)
class JoinReport:
    dropped_missing_beneficiary: int = 0
    dropped_missing_label: int = 0

    def to_json_dict(self) -> dict:
        return {
            "dropped_missing_beneficiary": self.dropped_missing_beneficiary,
            "dropped_missing_label": self.dropped_missing_label,
        }


@dataclass
class MergedDataset:
    rows: list[MergedRow]
    source_counts: SourceCounts
    # Not part of dataset identity: a CSV round trip cannot recover how
    # many rows an earlier join dropped.
    dropped: JoinReport = field(default_factory=JoinReport, compare=False)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, path: str | os.PathLike) -> None:
        write_merged_csv(self, path)

    @staticmethod
    def from_csv(path: str | os.PathLike) -> "MergedDataset":
        return read_merged_csv(path)


# --- column schemas ------------------------------------------------------


@dataclass(frozen=True)
class BeneficiarySchema:
    beneficiary_id: str = "BeneID"
    date_of_birth: str = "DOB"
    date_of_death: str = "DOD"
    gender: str = "Gender"
    race: str = "Race"
    chronic: tuple[str, ...] = (
        "ChronicCond_Alzheimer",
        "ChronicCond_Heartfailure",
        "ChronicCond_KidneyDisease",
        "ChronicCond_Cancer",
        "ChronicCond_ObstrPulmonary",
        "ChronicCond_Depression",
        "ChronicCond_Diabetes",
        "ChronicCond_IschemicHeart",
        "ChronicCond_Osteoporasis",
        "ChronicCond_rheumatoidarthritis",
        "ChronicCond_stroke",
    )
    ip_reimbursement: str = "IPAnnualReimbursementAmt"
    ip_deductible: str = "IPAnnualDeductibleAmt"
    op_reimbursement: str = "OPAnnualReimbursementAmt"
    op_deductible: str = "OPAnnualDeductibleAmt"

    def required_columns(self) -> list[str]:
        cols = [
            self.beneficiary_id,
            self.date_of_birth,
            self.date_of_death,
            self.gender,
            self.race,
            self.ip_reimbursement,
            self.ip_deductible,
            self.op_reimbursement,
            self.op_deductible,
        ]
        cols.extend(self.chronic)
        return cols


@dataclass(frozen=True)
class ClaimsSchema:
    claim_id: str = "ClaimID"
    beneficiary_id: str = "BeneID"
    provider_id: str = "Provider"
    claim_start: str = "ClaimStartDt"
    claim_end: str = "ClaimEndDt"
    admission_date: str = "AdmissionDt"
    discharge_date: str = "DischargeDt"
    reimbursed: str = "InscClaimAmtReimbursed"
    deductible: str = "DeductibleAmtPaid"
    attending: str = "AttendingPhysician"
    operating: str = "OperatingPhysician"
    other: str = "OtherPhysician"
    diagnosis_prefix: str = "ClmDiagnosisCode_"
    n_diagnosis: int = 10
    procedure_prefix: str = "ClmProcedureCode_"
    n_procedure: int = 6

    def diagnosis_columns(self) -> list[str]:
        return [f"{self.diagnosis_prefix}{i}" for i in range(1, self.n_diagnosis + 1)]

    def procedure_columns(self) -> list[str]:
        return [f"{self.procedure_prefix}{i}" for i in range(1, self.n_procedure + 1)]

    def required_columns(self, setting: Setting) -> list[str]:
        cols = [
            self.claim_id,
            self.beneficiary_id,
            self.provider_id,
            self.claim_start,
            self.claim_end,
            self.reimbursed,
            self.deductible,
            self.attending,
            self.operating,
            self.other,
        ]
        cols.extend(self.diagnosis_columns())
        cols.extend(self.procedure_columns())
        if setting is Setting.INPATIENT:
            cols.extend([self.admission_date, self.discharge_date])
        return cols


@dataclass(frozen=True)
class LabelSchema:
    provider_id: str = "Provider"
    potential_fraud: str = "PotentialFraud"


# --- low-level cell parsers ----------------------------------------------


def _open_text(source: str | os.PathLike | IO) -> tuple[IO, bool]:
    """Return (text stream, owns_handle). Accepts a path, a text stream,
    or a binary stream (decoded as UTF-8)."""
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or (
        hasattr(source, "mode") and "b" in getattr(source, "mode", "")
    ):
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
    return source, False


def _check_header(reader: csv.DictReader, required: Iterable[str], table: str) -> None:
    header = set(reader.fieldnames or ())
    for column in required:
        if column not in header:
            raise MissingColumn(column, table)


def _parse_date(text: str, row: int, column: str) -> date:
    text = text.strip()
    if not text:
        raise UnparseableDate(row, column)
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise UnparseableDate(row, column, text) from None


def _parse_optional_date(text: str, row: int, column: str) -> date | None:
    if not text or not text.strip():
        return None
    return _parse_date(text, row, column)


def _parse_cents(text: str, row: int, column: str, blank_is_zero: bool = False) -> int:
    text = text.strip()
    if not text:
        if blank_is_zero:
            return 0
        raise UnparseableAmount(row, column, text)
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise UnparseableAmount(row, column, text) from None
    if value < 0:
        raise NegativeAmount(row, column, text)
    cents = (value * 100).quantize(Decimal(1))
    return int(cents)


def _parse_chronic_flag(text: str, row: int, column: str) -> int:
    # Source encoding: 1 = condition present, 2 = absent. A plain 0/1
    # encoding is accepted unchanged.
    value = text.strip()
    if value == "1":
        return 1
    if value in ("2", "0"):
        return 0
    raise UnknownFlagValue(row, column, text)


# --- table parsers -------------------------------------------------------


def parse_beneficiaries(
    source: str | os.PathLike | IO,
    schema: BeneficiarySchema = BeneficiarySchema(),
) -> list[BeneficiaryRecord]:
    """Parse the beneficiary table.

    Raises MissingColumn, UnparseableDate, UnparseableAmount,
    NegativeAmount, UnknownFlagValue, DuplicateKey, or InvalidDateOrder,
    each carrying the offending 1-based data-row number.
    """
    stream, owns = _open_text(source)
    try:
        reader = csv.DictReader(stream)
        _check_header(reader, schema.required_columns(), "beneficiaries")
        records: list[BeneficiaryRecord] = []
        seen: set[str] = set()
        for row_no, row in enumerate(reader, start=1):
            bene_id = row[schema.beneficiary_id].strip()
            if bene_id in seen:
                raise DuplicateKey(bene_id, "beneficiaries")
            seen.add(bene_id)
            dob = _parse_date(row[schema.date_of_birth], row_no, schema.date_of_birth)
            dod = _parse_optional_date(row[schema.date_of_death], row_no, schema.date_of_death)
            if dod is not None and dod < dob:
                raise InvalidDateOrder(row_no, "date_of_death precedes date_of_birth")
            flags = tuple(
                _parse_chronic_flag(row[col], row_no, col) for col in schema.chronic
            )
            records.append(
                BeneficiaryRecord(
                    beneficiary_id=bene_id,
                    date_of_birth=dob,
                    date_of_death=dod,
                    gender=row[schema.gender].strip(),
                    race=row[schema.race].strip(),
                    chronic_conditions=flags,
                    annual_ip_reimbursement_cents=_parse_cents(
                        row[schema.ip_reimbursement], row_no, schema.ip_reimbursement
                    ),
                    annual_ip_deductible_cents=_parse_cents(
                        row[schema.ip_deductible], row_no, schema.ip_deductible
                    ),
                    annual_op_reimbursement_cents=_parse_cents(
                        row[schema.op_reimbursement], row_no, schema.op_reimbursement
                    ),
                    annual_op_deductible_cents=_parse_cents(
                        row[schema.op_deductible], row_no, schema.op_deductible
                    ),
                )
            )
        return records
    finally:
        if owns:
            stream.close()


def _compact_codes(row: dict, columns: list[str]) -> tuple[str, ...]:
    codes = []
    for col in columns:
        text = (row.get(col) or "").strip()
        if text:
            codes.append(text)
    return tuple(codes)


def parse_claims(
    source: str | os.PathLike | IO,
    setting: Setting,
    schema: ClaimsSchema = ClaimsSchema(),
) -> list[ClaimRecord]:
    """Parse one claims table (inpatient or outpatient).

    Inpatient rows must carry admission and discharge dates; a blank one
    raises UnparseableDate for that row. Deductible cells may be blank
    (parsed as 0 cents); reimbursed amounts may not.
    """
    stream, owns = _open_text(source)
    try:
        reader = csv.DictReader(stream)
        _check_header(reader, schema.required_columns(setting), "claims")
        records: list[ClaimRecord] = []
        for row_no, row in enumerate(reader, start=1):
            start = _parse_date(row[schema.claim_start], row_no, schema.claim_start)
            end = _parse_date(row[schema.claim_end], row_no, schema.claim_end)
            if end < start:
                raise InvalidDateOrder(row_no, "claim_end precedes claim_start")
            if setting is Setting.INPATIENT:
                admission = _parse_date(
                    row[schema.admission_date], row_no, schema.admission_date
                )
                discharge = _parse_date(
                    row[schema.discharge_date], row_no, schema.discharge_date
                )
                if discharge < admission:
                    raise InvalidDateOrder(row_no, "discharge_date precedes admission_date")
            else:
                admission = _parse_optional_date(
                    row.get(schema.admission_date, ""), row_no, schema.admission_date
                )
                discharge = _parse_optional_date(
                    row.get(schema.discharge_date, ""), row_no, schema.discharge_date
                )
            records.append(
                ClaimRecord(
                    claim_id=row[schema.claim_id].strip(),
                    beneficiary_id=row[schema.beneficiary_id].strip(),
                    provider_id=row[schema.provider_id].strip(),
                    setting=setting,
                    claim_start=start,
                    claim_end=end,
                    admission_date=admission,
                    discharge_date=discharge,
                    reimbursed_cents=_parse_cents(
                        row[schema.reimbursed], row_no, schema.reimbursed
                    ),
                    deductible_cents=_parse_cents(
                        row[schema.deductible], row_no, schema.deductible, blank_is_zero=True
                    ),
                    attending_physician=(row[schema.attending] or "").strip(),
                    operating_physician=(row[schema.operating] or "").strip(),
                    other_physician=(row[schema.other] or "").strip(),
                    diagnosis_codes=_compact_codes(row, schema.diagnosis_columns()),
                    procedure_codes=_compact_codes(row, schema.procedure_columns()),
                )
            )
        return records
    finally:
        if owns:
            stream.close()


def parse_labels(
    source: str | os.PathLike | IO,
    schema: LabelSchema = LabelSchema(),
) -> list[ProviderLabel]:
    """Parse the provider fraud-label table (PotentialFraud: Yes/No)."""
    stream, owns = _open_text(source)
    try:
        reader = csv.DictReader(stream)
        _check_header(reader, [schema.provider_id, schema.potential_fraud], "labels")
        records: list[ProviderLabel] = []
        seen: set[str] = set()
        for row_no, row in enumerate(reader, start=1):
            provider_id = row[schema.provider_id].strip()
            if provider_id in seen:
                raise DuplicateKey(provider_id, "labels")
            seen.add(provider_id)
            flag_text = row[schema.potential_fraud].strip()
            lowered = flag_text.lower()
            if lowered == "yes":
                flag = True
            elif lowered == "no":
                flag = False
            else:
                raise UnknownFlagValue(row_no, schema.potential_fraud, flag_text)
            records.append(ProviderLabel(provider_id=provider_id, potential_fraud=flag))
        return records
    finally:
        if owns:
            stream.close()


# --- merge ----------------------------------------------------------------


def merge_dataset(
    claims_inpatient: list[ClaimRecord],
    claims_outpatient: list[ClaimRecord],
    beneficiaries: list[BeneficiaryRecord],
    labels: list[ProviderLabel],
) -> MergedDataset:
    """Inner-join claims with beneficiaries (on beneficiary_id) and
    provider labels (on provider_id).

    Inpatient rows come first, each table in input order. Claims whose
    beneficiary is unknown are dropped and counted; of the remainder,
    claims whose provider has no label are dropped and counted. A join
    that leaves zero rows raises EmptyJoinResult.
    """
    bene_index = {b.beneficiary_id: b for b in beneficiaries}
    label_index = {l.provider_id: l.potential_fraud for l in labels}

    rows: list[MergedRow] = []
    dropped_bene = 0
    dropped_label = 0
    for claim in list(claims_inpatient) + list(claims_outpatient):
        beneficiary = bene_index.get(claim.beneficiary_id)
        if beneficiary is None:
            dropped_bene += 1
            continue
        fraud = label_index.get(claim.provider_id)
        if fraud is None:
            dropped_label += 1
            continue
        rows.append(MergedRow(claim=claim, beneficiary=beneficiary, potential_fraud=fraud))

    if not rows:
        raise EmptyJoinResult(
            "join produced zero rows; claim keys do not overlap the "
            "beneficiary/label tables"
        )

    n_ip = sum(1 for r in rows if r.claim.setting is Setting.INPATIENT)
    counts = SourceCounts(
        n_inpatient=n_ip,
        n_outpatient=len(rows) - n_ip,
        n_beneficiaries=len({r.claim.beneficiary_id for r in rows}),
        n_providers=len({r.claim.provider_id for r in rows}),
    )
    report = JoinReport(
        dropped_missing_beneficiary=dropped_bene,
        dropped_missing_label=dropped_label,
    )
    return MergedDataset(rows=rows, source_counts=counts, dropped=report)


# --- canonical merged CSV -------------------------------------------------

_MERGED_COLUMNS = [
    "claim_id",
    "beneficiary_id",
    "provider_id",
    "setting",
    "claim_start",
    "claim_end",
    "admission_date",
    "discharge_date",
    "reimbursed_cents",
    "deductible_cents",
    "attending_physician",
    "operating_physician",
    "other_physician",
    "diagnosis_codes",
    "procedure_codes",
    "date_of_birth",
    "date_of_death",
    "gender",
    "race",
    *(f"chronic_{name}" for name in CHRONIC_CONDITIONS),
    "annual_ip_reimbursement_cents",
    "annual_ip_deductible_cents",
    "annual_op_reimbursement_cents",
    "annual_op_deductible_cents",
    "potential_fraud",
]


def write_merged_csv(dataset: MergedDataset, path: str | os.PathLike) -> None:
    """Write the canonical single-file form of a merged dataset.

    Code lists are pipe-joined; money stays in integer cents; blank cells
    encode None. Re-parsing with read_merged_csv reproduces the dataset
    field-for-field.
    """
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_MERGED_COLUMNS)
        for row in dataset.rows:
            c, b = row.claim, row.beneficiary
            writer.writerow(
                [
                    c.claim_id,
                    c.beneficiary_id,
                    c.provider_id,
                    c.setting.value,
                    c.claim_start.isoformat(),
                    c.claim_end.isoformat(),
                    c.admission_date.isoformat() if c.admission_date else "",
                    c.discharge_date.isoformat() if c.discharge_date else "",
                    c.reimbursed_cents,
                    c.deductible_cents,
                    c.attending_physician,
                    c.operating_physician,
                    c.other_physician,
                    "|".join(c.diagnosis_codes),
                    "|".join(c.procedure_codes),
                    b.date_of_birth.isoformat(),
                    b.date_of_death.isoformat() if b.date_of_death else "",
                    b.gender,
                    b.race,
                    *b.chronic_conditions,
                    b.annual_ip_reimbursement_cents,
                    b.annual_ip_deductible_cents,
                    b.annual_op_reimbursement_cents,
                    b.annual_op_deductible_cents,
                    "Yes" if row.potential_fraud else "No",
                ]
            )


def read_merged_csv(path: str | os.PathLike) -> MergedDataset:
    """Inverse of write_merged_csv."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        _check_header(reader, _MERGED_COLUMNS, "merged")
        rows: list[MergedRow] = []
        for row_no, row in enumerate(reader, start=1):
            claim = ClaimRecord(
                claim_id=row["claim_id"],
                beneficiary_id=row["beneficiary_id"],
                provider_id=row["provider_id"],
                setting=Setting(row["setting"]),
                claim_start=_parse_date(row["claim_start"], row_no, "claim_start"),
                claim_end=_parse_date(row["claim_end"], row_no, "claim_end"),
                admission_date=_parse_optional_date(
                    row["admission_date"], row_no, "admission_date"
                ),
                discharge_date=_parse_optional_date(
                    row["discharge_date"], row_no, "discharge_date"
                ),
                reimbursed_cents=int(row["reimbursed_cents"]),
                deductible_cents=int(row["deductible_cents"]),
                attending_physician=row["attending_physician"],
                operating_physician=row["operating_physician"],
                other_physician=row["other_physician"],
                diagnosis_codes=tuple(
                    c for c in row["diagnosis_codes"].split("|") if c
                ),
                procedure_codes=tuple(
                    c for c in row["procedure_codes"].split("|") if c
                ),
            )
            beneficiary = BeneficiaryRecord(
                beneficiary_id=row["beneficiary_id"],
                date_of_birth=_parse_date(row["date_of_birth"], row_no, "date_of_birth"),
                date_of_death=_parse_optional_date(
                    row["date_of_death"], row_no, "date_of_death"
                ),
                gender=row["gender"],
                race=row["race"],
                chronic_conditions=tuple(
                    int(row[f"chronic_{name}"]) for name in CHRONIC_CONDITIONS
                ),
                annual_ip_reimbursement_cents=int(row["annual_ip_reimbursement_cents"]),
                annual_ip_deductible_cents=int(row["annual_ip_deductible_cents"]),
                annual_op_reimbursement_cents=int(row["annual_op_reimbursement_cents"]),
                annual_op_deductible_cents=int(row["annual_op_deductible_cents"]),
            )
            rows.append(
                MergedRow(
                    claim=claim,
                    beneficiary=beneficiary,
                    potential_fraud=row["potential_fraud"] == "Yes",
                )
            )
    if not rows:
        raise EmptyJoinResult(f"merged CSV {path} holds no rows")
    n_ip = sum(1 for r in rows if r.claim.setting is Setting.INPATIENT)
    counts = SourceCounts(
        n_inpatient=n_ip,
        n_outpatient=len(rows) - n_ip,
        n_beneficiaries=len({r.claim.beneficiary_id for r in rows}),
        n_providers=len({r.claim.provider_id for r in rows}),
    )
    return MergedDataset(rows=rows, source_counts=counts)
