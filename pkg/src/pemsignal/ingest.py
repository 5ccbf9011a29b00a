"""Loading therapy (prescription) and medical (event) files.

Both files are delimited UTF-8 text with a header row::

    patient_id,drug_code,date        # therapy
    patient_id,event_code,date       # medical

Dates are ISO ``YYYY-MM-DD``.  Malformed rows are skipped and counted, never
fatal.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError, IoFailure, MissingColumn
from .readcode import Readcode, parse_readcode

log = logging.getLogger(__name__)

DATE_MIN = dt.date(1900, 1, 1)
DATE_MAX = dt.date(2100, 1, 1)

THERAPY_COLUMNS = ("patient_id", "drug_code", "date")
MEDICAL_COLUMNS = ("patient_id", "event_code", "date")


@dataclass(frozen=True)
class PrescriptionRecord:
    patient_id: str
    drug_code: str
    date: dt.date


@dataclass(frozen=True)
class EventRecord:
    patient_id: str
    event_code: Readcode
    date: dt.date


@dataclass(frozen=True)
class LoadSummary:
    """Row accounting for one loader call.

    ``kept + skipped == total``.  Therapy rows that are well formed but belong
    to another drug are not part of ``total``; they are reported as
    ``excluded``.
    """

    path: str
    kept: int
    skipped: int
    excluded: int = 0

    @property
    def total(self) -> int:
        return self.kept + self.skipped


ExposureIndex = dict[str, dt.date]


def parse_date(raw: str) -> dt.date:
    d = dt.datetime.strptime(raw.strip(), "%Y-%m-%d").date()
    if not DATE_MIN <= d <= DATE_MAX:
        raise ValueError(f"date out of range: {raw}")
    return d


def _rows(path: str | Path, required: tuple[str, ...], delimiter: str) -> Iterator[dict[str, str]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        try:
            yield from reader
        except (csv.Error, UnicodeDecodeError) as exc:
            raise DataError(f"{path}: unreadable content: {exc}") from exc


def load_therapy(path: str | Path, drug_prefix: str, delimiter: str = ",",
                 with_summary: bool = False):
    """Prescriptions whose ``drug_code`` starts with ``drug_prefix``."""
    records: list[PrescriptionRecord] = []
    skipped = excluded = 0
    for row in _rows(path, THERAPY_COLUMNS, delimiter):
        pid = (row.get("patient_id") or "").strip()
        drug = (row.get("drug_code") or "").strip()
        try:
            if not pid or not drug:
                raise ValueError("empty field")
            date = parse_date(row.get("date") or "")
        except (ValueError, TypeError):
            skipped += 1
            continue
        if not drug.startswith(drug_prefix):
            excluded += 1
            continue
        records.append(PrescriptionRecord(pid, drug, date))

    summary = LoadSummary(str(path), len(records), skipped, excluded)
    log.info("therapy %s: kept=%d skipped=%d excluded=%d", path, summary.kept, skipped, excluded)
    return (records, summary) if with_summary else records


def load_medical(path: str | Path, delimiter: str = ",", with_summary: bool = False):
    """All medical event rows, with event codes canonicalized."""
    records: list[EventRecord] = []
    skipped = 0
    # many rows share a code; parse each distinct string once
    codes: dict[str, Readcode] = {}
    for row in _rows(path, MEDICAL_COLUMNS, delimiter):
        pid = (row.get("patient_id") or "").strip()
        raw_code = row.get("event_code") or ""
        try:
            if not pid:
                raise ValueError("empty patient_id")
            code = codes.get(raw_code)
            if code is None:
                code = codes[raw_code] = parse_readcode(raw_code)
            date = parse_date(row.get("date") or "")
        except (ValueError, TypeError):
            skipped += 1
            continue
        records.append(EventRecord(pid, code, date))

    summary = LoadSummary(str(path), len(records), skipped)
    log.info("medical %s: kept=%d skipped=%d", path, summary.kept, skipped)
    return (records, summary) if with_summary else records


def build_exposure_index(prescriptions: Iterable[PrescriptionRecord]) -> ExposureIndex:
    """Map each exposed patient to their first prescription date."""
    index: ExposureIndex = {}
    for rx in prescriptions:
        current = index.get(rx.patient_id)
        if current is None or rx.date < current:
            index[rx.patient_id] = rx.date
    return index
