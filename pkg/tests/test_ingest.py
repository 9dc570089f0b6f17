import csv
from pathlib import Path

import pytest

from adherelab.core import EventKind
from adherelab.ingest import (
    RawTables,
    CallLogRow,
    SchemaError,
    dedup_phones,
    ingest_dir,
    join_calls,
    load_tables,
)
from adherelab.simkit import SimConfig, export_dataset, simulate_cohort


def write_fixture(d: Path, patients, call_log, phone_map, patient_log):
    rows = {
        "patients.csv": [
            [
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
        ]
        + patients,
        "call_log.csv": [["event_id", "phone", "timestamp", "dose_date", "kind", "marked_by"]]
        + call_log,
        "phone_map.csv": [["phone", "patient_id"]] + phone_map,
        "patient_log.csv": [["note_id", "patient_id", "worker_id", "unit_id", "action", "timestamp"]]
        + patient_log,
    }
    for name, content in rows.items():
        with (d / name).open("w", newline="") as fh:
            csv.writer(fh).writerows(content)


def patient_row(pid, enroll="2023-01-01", end="2023-03-01", outcome="Cured"):
    return [pid, enroll, end, "F", "30-44", "50-64kg", "C001", "U001", outcome]


def call_row(eid, phone, day, hhmm="09:00"):
    return [eid, phone, f"{day}T{hhmm}", day, "call", ""]


def manual_row(eid, pid, day):
    return [eid, pid, f"{day}T19:00", day, "manual", "W001"]


def test_load_preserves_counts(tmp_path):
    write_fixture(
        tmp_path,
        patients=[patient_row("A"), patient_row("B")],
        call_log=[call_row("E1", "981", "2023-01-02"), manual_row("E2", "A", "2023-01-03")],
        phone_map=[["981", "A"]],
        patient_log=[["N1", "A", "W001", "U001", "note", "2023-01-02T10:00"]],
    )
    t = load_tables(tmp_path)
    assert len(t.patients) == 2
    assert len(t.call_log) == 2
    assert len(t.phone_map) == 1
    assert len(t.patient_log) == 1
    assert not t.rejects


def test_bad_date_lands_in_reject_report(tmp_path):
    write_fixture(
        tmp_path,
        patients=[patient_row("A"), patient_row("B", enroll="not-a-date")],
        call_log=[call_row("E1", "981", "2023-13-45")],
        phone_map=[["981", "A"]],
        patient_log=[],
    )
    t = load_tables(tmp_path)
    assert len(t.patients) == 1
    assert len(t.call_log) == 0
    tables = {(r.table, r.line) for r in t.rejects}
    assert ("patients", 3) in tables
    assert ("call_log", 2) in tables


def test_empty_call_log_is_valid(tmp_path):
    write_fixture(tmp_path, patients=[patient_row("A")], call_log=[], phone_map=[["981", "A"]], patient_log=[])
    t = load_tables(tmp_path)
    assert t.call_log == []


def test_header_mismatch_is_schema_error(tmp_path):
    write_fixture(tmp_path, patients=[patient_row("A")], call_log=[], phone_map=[], patient_log=[])
    (tmp_path / "phone_map.csv").write_text("phone,who\n")
    with pytest.raises(SchemaError):
        load_tables(tmp_path)


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_tables(tmp_path)


def shared_phone_tables():
    t = RawTables()
    t.phone_map = [("981", "A"), ("981", "B"), ("982", "A"), ("983", "C")]
    return t


def test_dedup_removes_shared_phone_and_callers(tmp_path):
    t = shared_phone_tables()
    import datetime

    t.call_log = [
        CallLogRow("E1", "981", datetime.datetime(2023, 1, 2, 9, 0), datetime.date(2023, 1, 2), EventKind.CALL, ""),
    ]
    t.patients = [object()] * 3  # only count matters for the fraction
    d = dedup_phones(t)
    assert "981" not in d.clean_map
    assert d.removed_patients == {"A", "B"}
    assert d.clean_map["983"] == "C"
    assert abs(d.removal_fraction - 2 / 3) < 1e-12


def test_dedup_without_calls_removes_nobody():
    d = dedup_phones(shared_phone_tables())
    assert d.removed_patients == frozenset()
    assert "981" in d.shared_phones


def test_dedup_is_idempotent():
    t = shared_phone_tables()
    d1 = dedup_phones(t)
    t2 = RawTables()
    t2.phone_map = [(p, pid) for p, pid in t.phone_map if p in d1.clean_map]
    d2 = dedup_phones(t2)
    assert d2.clean_map == d1.clean_map
    assert d2.removed_patients == frozenset()


def test_dedup_fixture_exactly_two_removed(tmp_path):
    patients = [patient_row(f"P{i}") for i in range(100)]
    phone_map = [[f"9{i:03d}", f"P{i}"] for i in range(100)] + [["888", "P0"], ["888", "P1"]]
    call_log = [call_row("E1", "888", "2023-01-02"), call_row("E2", "9002", "2023-01-02")]
    write_fixture(tmp_path, patients, call_log, phone_map, [])
    data = ingest_dir(tmp_path)
    assert len(data.patients) == 98
    assert data.dedup.removed_patients == {"P0", "P1"}


def test_join_attributes_and_drops(tmp_path):
    write_fixture(
        tmp_path,
        patients=[patient_row("A"), patient_row("B")],
        call_log=[
            call_row("E1", "981", "2023-01-02"),
            call_row("E2", "000", "2023-01-02"),
            manual_row("E3", "B", "2023-01-03"),
        ],
        phone_map=[["981", "A"]],
        patient_log=[],
    )
    t = load_tables(tmp_path)
    jr = join_calls(t, dedup_phones(t))
    assert [e.event_id for e in jr.events["A"]] == ["E1"]
    assert jr.events["A"][0].phone == "981"
    assert jr.dropped_unknown_phone == 1
    assert [e.event_id for e in jr.events["B"]] == ["E3"]
    assert jr.events["B"][0].kind is EventKind.MANUAL
    assert jr.events["B"][0].phone is None


def test_join_never_misattributes():
    cohort = simulate_cohort(SimConfig(n_patients=60, treatment_days_mean=40, seed=23))
    registered = {}
    for phone, pid in cohort.phone_map:
        registered.setdefault(phone, set()).add(pid)
    by_pid = {}
    for e in cohort.events:
        by_pid.setdefault(e.patient_id, []).append(e)
    for pid, events in by_pid.items():
        for e in events:
            if e.phone is not None:
                assert pid in registered[e.phone]


def test_shared_injection_round_trip_drops_affected(tmp_path):
    cfg = SimConfig(
        n_patients=100,
        treatment_days_mean=40,
        shared_phone_injection=True,
        shared_phone_frac=0.1,
        seed=31,
    )
    cohort = simulate_cohort(cfg)
    export_dataset(cohort, tmp_path)
    data = ingest_dir(tmp_path)
    assert data.dedup.shared_phones
    assert data.dedup.removed_patients
    # survivors keep identical calendars
    for pid, cal in data.calendars.items():
        assert cal == cohort.calendars[pid]
