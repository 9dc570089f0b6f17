"""Load, validate, and join the raw adherence tables.

Real dose logs are messy, so malformed rows land in a reject report with
their line numbers instead of aborting the load. Phones registered to more
than one patient cannot be attributed, so they are dropped, and any patient
with calls from such a phone is removed outright rather than analyzed with
an incomplete call record.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Optional

from .core import (
    AdherenceCalendar,
    DoseEvent,
    EventKind,
    Gender,
    Outcome,
    PatientRecord,
    WorkerNote,
    build_calendar,
)

DATE_FMT = "%Y-%m-%d"
TS_FMT = "%Y-%m-%dT%H:%M"

PATIENTS_HEADER = [
    "patient_id",
    "enrollment_date",
    "end_date",
    "gender",
    "age_band",
    "weight_band",
    "center_id",
    "tb_unit_id",
    "outcome",
]
CALL_LOG_HEADER = ["event_id", "phone", "timestamp", "dose_date", "kind", "marked_by"]
PHONE_MAP_HEADER = ["phone", "patient_id"]
PATIENT_LOG_HEADER = ["note_id", "patient_id", "worker_id", "unit_id", "action", "timestamp"]


@dataclass(frozen=True)
class RejectedRow:
    table: str
    line: int
    reason: str
    row: tuple[str, ...]


@dataclass(frozen=True)
class CallLogRow:
    """One raw call-log line.

    For ``kind=call`` the ``phone`` column holds the calling phone; for
    ``kind=manual`` it holds the patient id the worker marked, since manual
    doses are entered against a patient rather than received from a phone.
    """

    event_id: str
    phone: str
    timestamp: datetime
    dose_date: date
    kind: EventKind
    marked_by: str


@dataclass
class RawTables:
    patients: list[PatientRecord] = field(default_factory=list)
    call_log: list[CallLogRow] = field(default_factory=list)
    phone_map: list[tuple[str, str]] = field(default_factory=list)
    patient_log: list[WorkerNote] = field(default_factory=list)
    rejects: list[RejectedRow] = field(default_factory=list)


class SchemaError(ValueError):
    pass


def _read_rows(path: Path, header: list[str]) -> list[tuple[int, list[str]]]:
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise SchemaError(f"{path.name}: empty file, expected header {header}")
        if got != header:
            raise SchemaError(f"{path.name}: header {got} does not match {header}")
        return [(i, row) for i, row in enumerate(reader, start=2)]


def load_tables(data_dir: str | Path) -> RawTables:
    """Parse the four raw tables, collecting malformed rows as rejects."""
    d = Path(data_dir)
    tables = RawTables()

    for line, row in _read_rows(d / "patients.csv", PATIENTS_HEADER):
        try:
            if len(row) != len(PATIENTS_HEADER):
                raise ValueError(f"expected {len(PATIENTS_HEADER)} columns, got {len(row)}")
            pid, enroll, end, gender, age, weight, center, unit, outcome = row
            if not pid:
                raise ValueError("empty patient_id")
            tables.patients.append(
                PatientRecord(
                    patient_id=pid,
                    enrollment_date=datetime.strptime(enroll, DATE_FMT).date(),
                    end_date=datetime.strptime(end, DATE_FMT).date() if end else None,
                    gender=Gender(gender),
                    age_band=age,
                    weight_band=weight,
                    center_id=center,
                    tb_unit_id=unit,
                    outcome=Outcome(outcome),
                )
            )
        except (ValueError, KeyError) as exc:
            tables.rejects.append(RejectedRow("patients", line, str(exc), tuple(row)))

    for line, row in _read_rows(d / "call_log.csv", CALL_LOG_HEADER):
        try:
            if len(row) != len(CALL_LOG_HEADER):
                raise ValueError(f"expected {len(CALL_LOG_HEADER)} columns, got {len(row)}")
            event_id, phone, ts, dose, kind, marked_by = row
            if not event_id or not phone:
                raise ValueError("empty event_id or phone")
            tables.call_log.append(
                CallLogRow(
                    event_id=event_id,
                    phone=phone,
                    timestamp=datetime.strptime(ts, TS_FMT),
                    dose_date=datetime.strptime(dose, DATE_FMT).date(),
                    kind=EventKind(kind),
                    marked_by=marked_by,
                )
            )
        except ValueError as exc:
            tables.rejects.append(RejectedRow("call_log", line, str(exc), tuple(row)))

    for line, row in _read_rows(d / "phone_map.csv", PHONE_MAP_HEADER):
        try:
            if len(row) != 2 or not row[0] or not row[1]:
                raise ValueError("phone_map rows need non-empty phone and patient_id")
            tables.phone_map.append((row[0], row[1]))
        except ValueError as exc:
            tables.rejects.append(RejectedRow("phone_map", line, str(exc), tuple(row)))

    for line, row in _read_rows(d / "patient_log.csv", PATIENT_LOG_HEADER):
        try:
            if len(row) != len(PATIENT_LOG_HEADER):
                raise ValueError(f"expected {len(PATIENT_LOG_HEADER)} columns, got {len(row)}")
            note_id, pid, worker, unit, action, ts = row
            tables.patient_log.append(
                WorkerNote(
                    patient_id=pid,
                    worker_id=worker,
                    unit_id=unit,
                    action=action,
                    timestamp=datetime.strptime(ts, TS_FMT),
                    note_id=note_id,
                )
            )
        except ValueError as exc:
            tables.rejects.append(RejectedRow("patient_log", line, str(exc), tuple(row)))

    return tables


@dataclass(frozen=True)
class DedupResult:
    clean_map: dict[str, str]  # phone -> unique patient
    shared_phones: frozenset[str]
    removed_patients: frozenset[str]
    removal_fraction: float


def dedup_phones(tables: RawTables) -> DedupResult:
    """Drop phones shared across patients and the patients who used them.

    A shared phone cannot be attributed, so it leaves the map; a patient
    with even one call from a shared phone has an incomplete call record
    and is removed entirely.
    """
    owners: dict[str, set[str]] = {}
    for phone, pid in tables.phone_map:
        owners.setdefault(phone, set()).add(pid)
    shared = frozenset(p for p, who in owners.items() if len(who) > 1)
    clean_map = {p: next(iter(who)) for p, who in owners.items() if len(who) == 1}

    removed: set[str] = set()
    for row in tables.call_log:
        if row.kind is EventKind.CALL and row.phone in shared:
            removed.update(owners[row.phone])

    n_patients = len(tables.patients)
    fraction = len(removed) / n_patients if n_patients else 0.0
    return DedupResult(
        clean_map=clean_map,
        shared_phones=shared,
        removed_patients=frozenset(removed),
        removal_fraction=fraction,
    )


@dataclass(frozen=True)
class JoinResult:
    events: dict[str, list[DoseEvent]]
    dropped_unknown_phone: int
    dropped_removed_patient: int


def join_calls(tables: RawTables, dedup: DedupResult) -> JoinResult:
    """Attribute call rows to patients through the deduped phone map.

    Calls from unregistered (or removed) phones are dropped and counted.
    Manual rows pass through keyed by the patient id they carry.
    """
    events: dict[str, list[DoseEvent]] = {}
    unknown = 0
    dropped_removed = 0
    for row in tables.call_log:
        if row.kind is EventKind.CALL:
            pid = dedup.clean_map.get(row.phone)
            if pid is None:
                unknown += 1
                continue
            if pid in dedup.removed_patients:
                dropped_removed += 1
                continue
            events.setdefault(pid, []).append(
                DoseEvent(
                    patient_id=pid,
                    dose_date=row.dose_date,
                    kind=EventKind.CALL,
                    timestamp=row.timestamp,
                    phone=row.phone,
                    event_id=row.event_id,
                )
            )
        else:
            pid = row.phone  # manual rows carry the patient id here
            if pid in dedup.removed_patients:
                dropped_removed += 1
                continue
            events.setdefault(pid, []).append(
                DoseEvent(
                    patient_id=pid,
                    dose_date=row.dose_date,
                    kind=EventKind.MANUAL,
                    timestamp=row.timestamp,
                    marked_by=row.marked_by or None,
                    event_id=row.event_id,
                )
            )
    for rows in events.values():
        rows.sort(key=lambda e: (e.timestamp, e.event_id or ""))
    return JoinResult(
        events=events,
        dropped_unknown_phone=unknown,
        dropped_removed_patient=dropped_removed,
    )


@dataclass(frozen=True)
class IngestedData:
    patients: list[PatientRecord]
    calendars: dict[str, AdherenceCalendar]
    notes: list[WorkerNote]
    tables: RawTables
    dedup: DedupResult
    join: JoinResult


def ingest_dir(data_dir: str | Path, through: Optional[date] = None) -> IngestedData:
    """Full pipeline: load, dedup, join, and build per-patient calendars.

    Ongoing patients (no end date) get calendars bounded by ``through``;
    they are skipped when no bound is given.
    """
    tables = load_tables(data_dir)
    dedup = dedup_phones(tables)
    join = join_calls(tables, dedup)

    patients = [p for p in tables.patients if p.patient_id not in dedup.removed_patients]
    calendars: dict[str, AdherenceCalendar] = {}
    for p in patients:
        if p.end_date is None and through is None:
            continue
        calendars[p.patient_id] = build_calendar(
            p, join.events.get(p.patient_id, []), through=through
        )
    return IngestedData(
        patients=patients,
        calendars=calendars,
        notes=tables.patient_log,
        tables=tables,
        dedup=dedup,
        join=join,
    )
