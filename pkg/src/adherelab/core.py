"""Domain types and per-patient dose calendars.

Everything here is immutable after construction. Dates are timezone-naive
local calendar dates; dose accounting is day-granular throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Optional, Sequence


class Gender(Enum):
    M = "M"
    F = "F"
    O = "O"


AGE_BANDS = ("0-14", "15-29", "30-44", "45-59", "60+")
WEIGHT_BANDS = ("<35kg", "35-49kg", "50-64kg", "65kg+")


class Outcome(Enum):
    CURED = "Cured"
    TREATMENT_COMPLETE = "TreatmentComplete"
    DIED = "Died"
    TREATMENT_FAILED = "TreatmentFailed"
    LOST_TO_FOLLOW_UP = "LostToFollowUp"
    ONGOING = "Ongoing"


FAVORABLE_OUTCOMES = frozenset({Outcome.CURED, Outcome.TREATMENT_COMPLETE})
UNFAVORABLE_OUTCOMES = frozenset(
    {Outcome.DIED, Outcome.TREATMENT_FAILED, Outcome.LOST_TO_FOLLOW_UP}
)


class DoseStatus(Enum):
    """Per-day dose resolution.

    MISSING marks days outside the observed span (window padding); it is
    distinct from MISSED and never counts as a missed dose.
    """

    TAKEN_CALL = "taken_call"
    TAKEN_MANUAL = "taken_manual"
    MISSED = "missed"
    MISSING = "missing"

    @property
    def taken(self) -> bool:
        return self in (DoseStatus.TAKEN_CALL, DoseStatus.TAKEN_MANUAL)


class EventKind(Enum):
    CALL = "call"
    MANUAL = "manual"


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    enrollment_date: date
    end_date: Optional[date]
    gender: Gender
    age_band: str
    weight_band: str
    center_id: str
    tb_unit_id: str
    outcome: Outcome

    def __post_init__(self) -> None:
        if (self.outcome is Outcome.ONGOING) != (self.end_date is None):
            raise ValueError(
                f"{self.patient_id}: end_date must be absent iff outcome is Ongoing"
            )
        if self.end_date is not None and self.enrollment_date > self.end_date:
            raise ValueError(f"{self.patient_id}: enrollment_date after end_date")


@dataclass(frozen=True)
class DoseEvent:
    """One call or one manual dose mark.

    For calls the timestamp's date equals the dose date. Manual marks may be
    entered retroactively, so their timestamp may postdate the dose date.
    """

    patient_id: str
    dose_date: date
    kind: EventKind
    timestamp: datetime
    phone: Optional[str] = None
    marked_by: Optional[str] = None
    event_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is EventKind.CALL:
            if not self.phone:
                raise ValueError(f"call event on {self.dose_date} lacks a phone")
            if self.timestamp.date() != self.dose_date:
                raise ValueError(
                    f"call event timestamp {self.timestamp} not on dose date {self.dose_date}"
                )


@dataclass(frozen=True)
class WorkerNote:
    patient_id: str
    worker_id: str
    unit_id: str
    action: str
    timestamp: datetime
    note_id: Optional[str] = None


@dataclass(frozen=True)
class AdherenceCalendar:
    """Day-indexed dose ledger over the observed treatment span.

    ``statuses[i]`` covers ``start + i`` days. ``call_times[i]`` keeps every
    raw call timestamp on that day (several calls may land on one day; at
    most one counts as the dose). ``manual_marks[i]`` counts manual entries
    for the day, including redundant marks on days that already have a call.
    """

    patient_id: str
    start: date
    statuses: tuple[DoseStatus, ...]
    call_times: tuple[tuple[datetime, ...], ...]
    manual_marks: tuple[int, ...]

    @property
    def n_days(self) -> int:
        return len(self.statuses)

    @property
    def end(self) -> date:
        return self.start + timedelta(days=self.n_days - 1)

    def day_index(self, day: date) -> int:
        return (day - self.start).days

    def date_at(self, t: int) -> date:
        return self.start + timedelta(days=t)


class CalendarError(ValueError):
    pass


def build_calendar(
    patient: PatientRecord,
    events: Sequence[DoseEvent],
    through: Optional[date] = None,
) -> AdherenceCalendar:
    """Materialize the per-day adherence string from raw dose events.

    Every treatment day gets exactly one status. A day with at least one call
    is TAKEN_CALL regardless of manual marks (a dose counts only when the
    patient calls; manual marking is the fallback path). Days with only
    manual marks are TAKEN_MANUAL; all remaining days are MISSED.

    ``through`` bounds the span for ongoing patients without an end date.
    """
    end = patient.end_date if patient.end_date is not None else through
    if end is None:
        raise CalendarError(
            f"{patient.patient_id}: ongoing patient needs an explicit 'through' date"
        )
    n_days = (end - patient.enrollment_date).days + 1
    calls: list[list[datetime]] = [[] for _ in range(n_days)]
    manual: list[int] = [0] * n_days

    for ev in events:
        if ev.patient_id != patient.patient_id:
            raise CalendarError(
                f"event {ev.event_id or ev.timestamp} belongs to {ev.patient_id}, "
                f"not {patient.patient_id}"
            )
        idx = (ev.dose_date - patient.enrollment_date).days
        if idx < 0 or idx >= n_days:
            raise CalendarError(
                f"event {ev.event_id or ev.timestamp} dated {ev.dose_date} outside "
                f"treatment span [{patient.enrollment_date}, {end}]"
            )
        if ev.kind is EventKind.CALL:
            calls[idx].append(ev.timestamp)
        else:
            manual[idx] += 1

    statuses = []
    for i in range(n_days):
        if calls[i]:
            statuses.append(DoseStatus.TAKEN_CALL)
        elif manual[i]:
            statuses.append(DoseStatus.TAKEN_MANUAL)
        else:
            statuses.append(DoseStatus.MISSED)

    return AdherenceCalendar(
        patient_id=patient.patient_id,
        start=patient.enrollment_date,
        statuses=tuple(statuses),
        call_times=tuple(tuple(sorted(c)) for c in calls),
        manual_marks=tuple(manual),
    )


def window(
    calendar: AdherenceCalendar, t: int, length: int, pad: bool = False
) -> list[DoseStatus]:
    """Return exactly ``length`` statuses ending at day index ``t``.

    With ``pad=True`` the slice may extend before enrollment; those prefix
    days come back as MISSING. Without padding, a window that would start
    before day 0 is an error, as is any ``t`` past the calendar end.
    """
    if length <= 0:
        raise ValueError("window length must be positive")
    if t < 0 or t >= calendar.n_days:
        raise CalendarError(
            f"day index {t} out of range for {calendar.n_days}-day calendar"
        )
    lo = t - length + 1
    if lo < 0:
        if not pad:
            raise CalendarError(
                f"window [{lo}, {t}] extends before enrollment and pad is not allowed"
            )
        return [DoseStatus.MISSING] * (-lo) + list(calendar.statuses[: t + 1])
    return list(calendar.statuses[lo : t + 1])


def missed_in_window(
    calendar: AdherenceCalendar, t: int, length: int = 7, pad: bool = False
) -> int:
    """Count MISSED days in the window ending at ``t``; MISSING never counts."""
    return sum(1 for s in window(calendar, t, length, pad) if s is DoseStatus.MISSED)
