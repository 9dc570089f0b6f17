from datetime import date, datetime, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adherelab.core import (
    AdherenceCalendar,
    CalendarError,
    DoseEvent,
    DoseStatus,
    EventKind,
    Gender,
    Outcome,
    PatientRecord,
    build_calendar,
    missed_in_window,
    window,
)

D0 = date(2023, 3, 1)


def make_patient(n_days=10, outcome=Outcome.CURED, pid="P1"):
    return PatientRecord(
        patient_id=pid,
        enrollment_date=D0,
        end_date=D0 + timedelta(days=n_days - 1),
        gender=Gender.F,
        age_band="30-44",
        weight_band="50-64kg",
        center_id="C001",
        tb_unit_id="U001",
        outcome=outcome,
    )


def call(day_offset, hour=9, minute=0, pid="P1", phone="9800000000"):
    d = D0 + timedelta(days=day_offset)
    return DoseEvent(
        patient_id=pid,
        dose_date=d,
        kind=EventKind.CALL,
        timestamp=datetime(d.year, d.month, d.day, hour, minute),
        phone=phone,
    )


def manual(day_offset, pid="P1", lag_days=0):
    d = D0 + timedelta(days=day_offset)
    ts = d + timedelta(days=lag_days)
    return DoseEvent(
        patient_id=pid,
        dose_date=d,
        kind=EventKind.MANUAL,
        timestamp=datetime(ts.year, ts.month, ts.day, 19, 0),
        marked_by="W001",
    )


def statuses_from(seq):
    """Build a calendar directly from a status string: C call, M manual, X missed."""
    codes = {"C": DoseStatus.TAKEN_CALL, "M": DoseStatus.TAKEN_MANUAL, "X": DoseStatus.MISSED}
    events = []
    for i, ch in enumerate(seq):
        if ch == "C":
            events.append(call(i))
        elif ch == "M":
            events.append(manual(i))
    return build_calendar(make_patient(n_days=len(seq)), events)


def test_build_calendar_basic():
    cal = build_calendar(make_patient(n_days=3), [call(0), manual(2)])
    assert cal.statuses == (
        DoseStatus.TAKEN_CALL,
        DoseStatus.MISSED,
        DoseStatus.TAKEN_MANUAL,
    )


def test_two_calls_same_day_one_dose():
    cal = build_calendar(make_patient(n_days=2), [call(0, 9, 0), call(0, 9, 30)])
    assert cal.statuses[0] is DoseStatus.TAKEN_CALL
    assert len(cal.call_times[0]) == 2
    assert cal.call_times[0][0] < cal.call_times[0][1]


def test_call_wins_over_manual_same_day():
    cal = build_calendar(make_patient(n_days=1), [manual(0), call(0)])
    assert cal.statuses[0] is DoseStatus.TAKEN_CALL
    assert cal.manual_marks[0] == 1


def test_event_outside_span_rejected():
    with pytest.raises(CalendarError, match="outside treatment span"):
        build_calendar(make_patient(n_days=3), [manual(5)])


def test_event_wrong_patient_rejected():
    with pytest.raises(CalendarError):
        build_calendar(make_patient(n_days=3), [call(0, pid="P2")])


def test_retroactive_manual_allowed():
    cal = build_calendar(make_patient(n_days=5), [manual(1, lag_days=3)])
    assert cal.statuses[1] is DoseStatus.TAKEN_MANUAL


def test_call_event_requires_phone():
    d = D0
    with pytest.raises(ValueError, match="phone"):
        DoseEvent(
            patient_id="P1",
            dose_date=d,
            kind=EventKind.CALL,
            timestamp=datetime(d.year, d.month, d.day, 9, 0),
        )


def test_ongoing_patient_needs_through():
    p = PatientRecord(
        **{**make_patient().__dict__, "end_date": None, "outcome": Outcome.ONGOING}
    )
    with pytest.raises(CalendarError, match="through"):
        build_calendar(p, [])
    cal = build_calendar(p, [call(0)], through=D0 + timedelta(days=4))
    assert cal.n_days == 5


def test_window_exact():
    cal = statuses_from("CXCCXXC" + "CCC")
    assert window(cal, 6, 7) == list(cal.statuses[:7])


def test_window_padded():
    cal = statuses_from("CXC")
    w = window(cal, 2, 7, pad=True)
    assert w[:4] == [DoseStatus.MISSING] * 4
    assert w[4:] == list(cal.statuses)


def test_window_errors():
    cal = statuses_from("CCC")
    with pytest.raises(CalendarError):
        window(cal, 5, 3)
    with pytest.raises(CalendarError):
        window(cal, 2, 7)  # pad not allowed


def test_missed_in_window_counts():
    cal = statuses_from("CXCCXXC")
    assert missed_in_window(cal, 6, 7) == 3
    assert missed_in_window(statuses_from("CCCCCCC"), 6, 7) == 0


def test_missed_in_window_padding_excludes_missing():
    cal = statuses_from("XCX")
    assert missed_in_window(cal, 2, 7, pad=True) == 2


@given(
    seq=st.text(alphabet="CMX", min_size=1, max_size=60),
    t=st.integers(min_value=0, max_value=59),
    length=st.integers(min_value=1, max_value=10),
)
@settings(max_examples=200, deadline=None)
def test_missed_in_window_matches_bruteforce(seq, t, length):
    cal = statuses_from(seq)
    if t >= cal.n_days:
        with pytest.raises(CalendarError):
            missed_in_window(cal, t, length, pad=True)
        return
    got = missed_in_window(cal, t, length, pad=True)
    expected = sum(
        1 for d in range(t - length + 1, t + 1) if 0 <= d and seq[d] == "X"
    )
    assert got == expected


@given(seq=st.text(alphabet="CMX", min_size=1, max_size=80))
@settings(max_examples=100, deadline=None)
def test_statuses_partition_all_days(seq):
    cal = statuses_from(seq)
    counts = {s: 0 for s in DoseStatus}
    for s in cal.statuses:
        counts[s] += 1
    assert counts[DoseStatus.MISSING] == 0
    assert (
        counts[DoseStatus.TAKEN_CALL]
        + counts[DoseStatus.TAKEN_MANUAL]
        + counts[DoseStatus.MISSED]
        == cal.n_days
    )


def test_build_calendar_deterministic_under_event_order():
    events = [call(0, 9, 30), call(0, 9, 0), manual(2), call(1)]
    a = build_calendar(make_patient(n_days=3), events)
    b = build_calendar(make_patient(n_days=3), list(reversed(events)))
    assert a == b
