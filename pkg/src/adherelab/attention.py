"""Daily attention-level state machine and risk-point screening.

The dashboard assigns every patient a MEDIUM or HIGH attention level each
day from their trailing 7-day dose record, with a worker-note override.
Risk prediction points are screened so that scarce in-person interventions
(assumed to target only HIGH patients) cannot sit between the prediction
time and the day that produced the label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import AdherenceCalendar, CalendarError, WorkerNote, missed_in_window


class AttentionState:
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"


MEDIUM = AttentionState.MEDIUM
HIGH = AttentionState.HIGH


@dataclass(frozen=True)
class AttentionTimeline:
    patient_id: str
    states: tuple[str, ...]

    def state(self, t: int) -> str:
        return self.states[t]


def attention_step(
    misses7: int,
    prev: str,
    note_in_last_7d: bool,
    note_override: bool = True,
) -> str:
    """One daily update of the attention level.

    A worker note in the trailing week forces MEDIUM. Otherwise 0-1 misses
    in the trailing week mean MEDIUM, 4 or more mean HIGH, and 2-3 retain
    the previous day's level. ``note_override=False`` lets 4+ misses win
    over a note instead (the note rule normally takes precedence).
    """
    if not 0 <= misses7 <= 7:
        raise ValueError(f"misses7 must be in [0, 7], got {misses7}")
    if note_in_last_7d and (note_override or misses7 < 4):
        return MEDIUM
    if misses7 <= 1:
        return MEDIUM
    if misses7 >= 4:
        return HIGH
    return prev


def _note_day_indices(calendar: AdherenceCalendar, notes: Sequence[WorkerNote]) -> set[int]:
    return {
        calendar.day_index(n.timestamp.date())
        for n in notes
        if n.patient_id == calendar.patient_id
    }


def attention_timeline(
    calendar: AdherenceCalendar,
    notes: Sequence[WorkerNote] = (),
    note_override: bool = True,
) -> AttentionTimeline:
    """Replay the state machine over a full calendar.

    Day 0 starts MEDIUM. Each later day t is stepped with the missed count
    over the padded window [t-6, t] and a flag for any note dated in that
    same trailing week. Pre-enrollment padding contributes zero misses.
    """
    note_days = _note_day_indices(calendar, notes)
    states = [MEDIUM]
    for t in range(1, calendar.n_days):
        misses = missed_in_window(calendar, t, 7, pad=True)
        noted = any(d in note_days for d in range(t - 6, t + 1))
        states.append(attention_step(misses, states[-1], noted, note_override))
    return AttentionTimeline(patient_id=calendar.patient_id, states=tuple(states))


@dataclass(frozen=True)
class RiskPoint:
    eligible: bool
    label: Optional[int] = None
    transition_day: Optional[int] = None


def screen_risk_point(
    timeline: AttentionTimeline, calendar: AdherenceCalendar, t: int
) -> RiskPoint:
    """Screen day ``t`` as a risk-prediction point.

    Patients already HIGH at ``t`` are ineligible (they are already known to
    the worker and may be receiving scarce interventions). For a MEDIUM
    patient the label is 1 when any day in [t+1, t+7] is HIGH, with the
    earliest such day recorded, else 0.
    """
    if t < 0 or t + 7 >= calendar.n_days:
        raise CalendarError(
            f"risk point at day {t} needs days through {t + 7}, "
            f"calendar has {calendar.n_days}"
        )
    if timeline.state(t) == HIGH:
        return RiskPoint(eligible=False)
    for ti in range(t + 1, t + 8):
        if timeline.state(ti) == HIGH:
            return RiskPoint(eligible=True, label=1, transition_day=ti)
    return RiskPoint(eligible=True, label=0)
