"""Labeled sample generation for the three prediction tasks.

Risk: for a patient at MEDIUM attention on day t, predict a transition to
HIGH within the next 7 days from the trailing week of data. Outcome:
predict an unfavorable terminal outcome from the first 35 days. LCFO:
predict from the first week whether the patient will finish favorably yet
call on under a quarter of the remaining days (dose takers who skip calls).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .attention import screen_risk_point
from .core import (
    AdherenceCalendar,
    DoseStatus,
    FAVORABLE_OUTCOMES,
    Outcome,
    UNFAVORABLE_OUTCOMES,
)
from .featurize import CategoryCodec, static_features
from .simkit import Cohort


class Task(Enum):
    RISK = "risk"
    OUTCOME = "outcome"
    LCFO = "lcfo"


@dataclass(frozen=True, eq=False)
class TaskSample:
    """One labeled instance.

    ``anchor`` is the day index of the last input-window day; the window is
    ``[anchor - k + 1, anchor]``. ``call_seq`` holds 1 for a taken dose
    (call or manual) and 0 for a miss; ``manual_seq`` flags the manually
    marked days; ``cum_miss_seq`` is the running lifetime missed-dose count
    through each window day.
    """

    task: Task
    patient_id: str
    anchor: int
    call_seq: tuple[int, ...]
    manual_seq: tuple[int, ...]
    cum_miss_seq: tuple[int, ...]
    static: np.ndarray
    label: int
    transition_day: Optional[int] = None

    def __post_init__(self) -> None:
        if not (len(self.call_seq) == len(self.manual_seq) == len(self.cum_miss_seq)):
            raise ValueError("sequence lengths disagree")
        if any(b > a for a, b in zip(self.cum_miss_seq[1:], self.cum_miss_seq)):
            raise ValueError("cum_miss_seq must be nondecreasing")
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")

    @property
    def k(self) -> int:
        return len(self.call_seq)


def _sequences(
    calendar: AdherenceCalendar, lo: int, hi: int, cum_miss: np.ndarray
) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    call_seq, manual_seq = [], []
    for d in range(lo, hi + 1):
        s = calendar.statuses[d]
        call_seq.append(1 if s.taken else 0)
        manual_seq.append(1 if s is DoseStatus.TAKEN_MANUAL else 0)
    return tuple(call_seq), tuple(manual_seq), tuple(int(c) for c in cum_miss[lo : hi + 1])


def _cum_misses(calendar: AdherenceCalendar) -> np.ndarray:
    missed = np.array([s is DoseStatus.MISSED for s in calendar.statuses], dtype=int)
    return np.cumsum(missed)


RISK_K = 7
RISK_MAX_MANUAL = 2


def gen_risk_samples(cohort: Cohort, codec: Optional[CategoryCodec] = None) -> list[TaskSample]:
    """Scan 14-day stretches with non-overlapping 7-day input windows.

    The first week of treatment and the last day are excluded, points are
    kept only when the patient is MEDIUM at the anchor, and input windows
    with more than 2 manual doses or no misses at all are dropped.
    """
    codec = codec or CategoryCodec.from_patients(cohort.patients)
    samples: list[TaskSample] = []
    for patient in cohort.patients:
        cal = cohort.calendars[patient.patient_id]
        tl = cohort.timelines[patient.patient_id]
        cum = _cum_misses(cal)
        t = RISK_K + RISK_K - 1  # first anchor: input window covers days 7..13
        while t + RISK_K <= cal.n_days - 2:
            lo, hi = t - RISK_K + 1, t
            point = screen_risk_point(tl, cal, t)
            if point.eligible:
                manual = sum(
                    1 for d in range(lo, hi + 1) if cal.statuses[d] is DoseStatus.TAKEN_MANUAL
                )
                misses = sum(
                    1 for d in range(lo, hi + 1) if cal.statuses[d] is DoseStatus.MISSED
                )
                if manual <= RISK_MAX_MANUAL and misses > 0:
                    call_seq, manual_seq, cum_seq = _sequences(cal, lo, hi, cum)
                    samples.append(
                        TaskSample(
                            task=Task.RISK,
                            patient_id=patient.patient_id,
                            anchor=t,
                            call_seq=call_seq,
                            manual_seq=manual_seq,
                            cum_miss_seq=cum_seq,
                            static=static_features(cal, patient, lo, hi, codec),
                            label=point.label,
                            transition_day=point.transition_day,
                        )
                    )
            t += RISK_K
    return samples


def gen_outcome_samples(
    cohort: Cohort, k: int = 35, codec: Optional[CategoryCodec] = None
) -> list[TaskSample]:
    """One sample per patient over their first ``k`` days; label 1 is an
    unfavorable terminal outcome.

    Patients without a terminal outcome, present for under k+1 days, or
    with more than half of the first k days manually marked are excluded.
    """
    codec = codec or CategoryCodec.from_patients(cohort.patients)
    samples: list[TaskSample] = []
    for patient in cohort.patients:
        if patient.outcome is Outcome.ONGOING:
            continue
        cal = cohort.calendars[patient.patient_id]
        if cal.n_days < k + 1:
            continue
        manual = sum(
            1 for d in range(k) if cal.statuses[d] is DoseStatus.TAKEN_MANUAL
        )
        if manual > k / 2:
            continue
        cum = _cum_misses(cal)
        call_seq, manual_seq, cum_seq = _sequences(cal, 0, k - 1, cum)
        samples.append(
            TaskSample(
                task=Task.OUTCOME,
                patient_id=patient.patient_id,
                anchor=k - 1,
                call_seq=call_seq,
                manual_seq=manual_seq,
                cum_miss_seq=cum_seq,
                static=static_features(cal, patient, 0, k - 1, codec),
                label=1 if patient.outcome in UNFAVORABLE_OUTCOMES else 0,
            )
        )
    return samples


LCFO_CALL_RATE = 0.25


def gen_lcfo_samples(
    cohort: Cohort, k: int = 7, codec: Optional[CategoryCodec] = None
) -> list[TaskSample]:
    """Label 1 when the outcome is favorable and the patient called on
    strictly less than a quarter of the days from day k+1 onward.

    No manual-dose exclusion here: heavy early manual marking is itself a
    signal for this task. Patients need an assigned outcome and at least
    k+7 days of data.
    """
    codec = codec or CategoryCodec.from_patients(cohort.patients)
    samples: list[TaskSample] = []
    for patient in cohort.patients:
        if patient.outcome is Outcome.ONGOING:
            continue
        cal = cohort.calendars[patient.patient_id]
        if cal.n_days < k + 7:
            continue
        future = cal.statuses[k:]
        call_rate = sum(1 for s in future if s is DoseStatus.TAKEN_CALL) / len(future)
        label = int(
            patient.outcome in FAVORABLE_OUTCOMES and call_rate < LCFO_CALL_RATE
        )
        cum = _cum_misses(cal)
        call_seq, manual_seq, cum_seq = _sequences(cal, 0, k - 1, cum)
        samples.append(
            TaskSample(
                task=Task.LCFO,
                patient_id=patient.patient_id,
                anchor=k - 1,
                call_seq=call_seq,
                manual_seq=manual_seq,
                cum_miss_seq=cum_seq,
                static=static_features(cal, patient, 0, k - 1, codec),
                label=label,
            )
        )
    return samples


def split(
    samples: Sequence[TaskSample], test_frac: float = 0.25, seed: int = 0
) -> tuple[list[TaskSample], list[TaskSample]]:
    """Patient-level random split: all samples of a patient land on one side."""
    if not samples:
        raise ValueError("cannot split an empty sample list")
    if not 0.0 < test_frac < 1.0:
        raise ValueError("test_frac must be in (0, 1)")
    patients = sorted({s.patient_id for s in samples})
    rng = np.random.default_rng(seed)
    rng.shuffle(patients)
    n_test = int(round(len(patients) * test_frac))
    test_ids = set(patients[:n_test])
    train = [s for s in samples if s.patient_id not in test_ids]
    test = [s for s in samples if s.patient_id in test_ids]
    return train, test


def write_samples(samples: Sequence[TaskSample], path: str | Path, feature_names: Sequence[str]) -> None:
    """Export samples as CSV: metadata, bitstring sequences, then the
    schema-versioned static feature columns."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["task", "patient_id", "anchor", "label", "call_seq", "cum_miss_seq"]
            + list(feature_names)
        )
        for s in samples:
            w.writerow(
                [
                    s.task.value,
                    s.patient_id,
                    s.anchor,
                    s.label,
                    "".join(str(b) for b in s.call_seq),
                    ";".join(str(c) for c in s.cum_miss_seq),
                ]
                + [repr(float(v)) for v in s.static]
            )
