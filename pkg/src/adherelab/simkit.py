"""Synthetic cohort generator with a hidden intervention ledger.

The simulator plays out a cohort day by day: patients call (or silently
take, or miss) their dose, workers mark manual doses, the dashboard
attention level is updated, and an intervention policy reacts to it. Every
sms / phone-call / house-visit the policy issues is recorded in a ledger
that downstream consumers never see through the exported tables, so the
screening logic that is supposed to keep scarce interventions out of
training labels can be validated against ground truth.

House visits are budgeted per worker per day and, in the default
proxy-respecting mode, go only to patients whose attention was HIGH at the
end of the previous day. Adversarial mode additionally visits MEDIUM
patients with a configured probability, giving contamination checks
something to catch.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .attention import HIGH, MEDIUM, AttentionTimeline, attention_step
from .core import (
    AdherenceCalendar,
    DoseEvent,
    DoseStatus,
    EventKind,
    Gender,
    Outcome,
    PatientRecord,
    WorkerNote,
    AGE_BANDS,
    WEIGHT_BANDS,
    build_calendar,
)


class PolicyMode(Enum):
    PROXY_RESPECTING = "proxy_respecting"
    ADVERSARIAL = "adversarial"


class InterventionKind(Enum):
    SMS = "sms"
    PHONE_CALL = "phone_call"
    HOUSE_VISIT = "house_visit"


@dataclass(frozen=True)
class InterventionEvent:
    patient_id: str
    day: date
    kind: InterventionKind


@dataclass(frozen=True)
class InterventionLedger:
    events: tuple[InterventionEvent, ...]

    def __len__(self) -> int:
        return len(self.events)


def ledger_events(
    ledger: InterventionLedger,
    patient_id: str,
    after: date,
    through: date,
    kind: Optional[InterventionKind] = None,
) -> list[InterventionEvent]:
    """Matching events with dates in the half-open range (after, through]."""
    out = [
        ev
        for ev in ledger.events
        if ev.patient_id == patient_id
        and after < ev.day <= through
        and (kind is None or ev.kind is kind)
    ]
    out.sort(key=lambda ev: ev.day)
    return out


@dataclass(frozen=True)
class ArchetypeParams:
    """Daily behavior knobs for one patient archetype.

    ``p_call`` is the base probability of proving the dose by call. When a
    decline window is set, the call probability drops by a per-patient rate
    each day after a per-patient onset, down to ``p_call_floor``.
    ``p_take_nocall`` is the chance the dose was still consumed on a
    no-call day, and ``p_manual_given_take`` the chance a worker marks such
    a day manually. ``boost_response`` scales how much of an active
    intervention boost reaches this archetype's call probability. The
    novelty fields model early onboarding engagement: calls are more likely
    for the first ``novelty_days`` of treatment.
    """

    p_call: float
    p_take_nocall: float
    p_manual_given_take: float
    boost_response: float = 1.0
    decline_onset: Optional[tuple[int, int]] = None
    decline_rate: Optional[tuple[float, float]] = None
    # when set, each patient draws their decline rate from one of these
    # ranges uniformly at random (bimodal fast/slow collapse speeds)
    decline_rate_modes: Optional[tuple[tuple[float, float], ...]] = None
    p_call_floor: float = 0.05
    call_sd_minutes: float = 45.0
    extra_call_prob: float = 0.03
    novelty_days: int = 0
    novelty_boost: float = 0.0


STEADY = "Steady"
DECLINER = "Decliner"
SPORADIC = "Sporadic"
NON_CALLER = "NonCallerAdherent"

DEFAULT_ARCHETYPES: dict[str, ArchetypeParams] = {
    STEADY: ArchetypeParams(
        p_call=0.92, p_take_nocall=0.50, p_manual_given_take=0.05, call_sd_minutes=20.0
    ),
    DECLINER: ArchetypeParams(
        p_call=0.90,
        p_take_nocall=0.30,
        p_manual_given_take=0.05,
        decline_onset=(15, 70),
        decline_rate=(0.015, 0.035),
        call_sd_minutes=30.0,
    ),
    SPORADIC: ArchetypeParams(
        p_call=0.62, p_take_nocall=0.45, p_manual_given_take=0.06, call_sd_minutes=240.0
    ),
    NON_CALLER: ArchetypeParams(
        p_call=0.15,
        p_take_nocall=0.93,
        p_manual_given_take=0.75,
        boost_response=0.05,
        call_sd_minutes=120.0,
        novelty_days=7,
        novelty_boost=0.45,
    ),
}

DEFAULT_MIXTURE: dict[str, float] = {
    STEADY: 0.50,
    DECLINER: 0.15,
    SPORADIC: 0.20,
    NON_CALLER: 0.15,
}


@dataclass(frozen=True)
class PolicyParams:
    """Intervention policy reacting to the daily dashboard."""

    visit_budget_per_worker: int = 2
    visit_boost: float = 0.35
    visit_duration_days: int = 10
    sms_miss_threshold: int = 1
    sms_boost: float = 0.04
    sms_duration_days: int = 2
    phone_miss_range: tuple[int, int] = (2, 3)
    phone_boost: float = 0.10
    phone_duration_days: int = 3
    adversarial_visit_prob: float = 0.05
    note_prob: float = 0.01


@dataclass(frozen=True)
class SimConfig:
    n_patients: int = 200
    mixture: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIXTURE))
    archetypes: dict[str, ArchetypeParams] = field(
        default_factory=lambda: dict(DEFAULT_ARCHETYPES)
    )
    policy: PolicyParams = field(default_factory=PolicyParams)
    n_centers: int = 24
    n_tb_units: int = 8
    treatment_days_mean: int = 180
    treatment_days_sd: float = 0.0
    enroll_window_days: int = 30
    start_date: date = date(2023, 1, 6)
    horizon_days: Optional[int] = None
    favorable_take_fraction: float = 0.8
    hazard_base: float = 1e-4
    hazard_miss_mult: float = 0.6
    extra_phone_prob: float = 0.15
    shared_phone_injection: bool = False
    shared_phone_frac: float = 0.01
    # units with index < frac * n_tb_units concentrate decliners: their
    # Decliner mixture weight is multiplied and renormalized
    risky_unit_frac: float = 0.0
    risky_unit_decliner_mult: float = 1.0
    # per-unit archetype overrides: unit index -> {archetype name -> params}
    unit_archetypes: dict[int, dict[str, ArchetypeParams]] = field(default_factory=dict)
    # relative patient volume per unit (uniform when unset)
    unit_size_weights: Optional[tuple[float, ...]] = None
    seed: int = 0

    def validate(self) -> None:
        if self.n_patients <= 0:
            raise ValueError("n_patients must be positive")
        weights = [self.mixture.get(k, 0.0) for k in self.archetypes]
        if any(w < 0 for w in self.mixture.values()) or not np.isclose(
            sum(self.mixture.values()), 1.0
        ):
            raise ValueError(f"mixture weights must be >= 0 and sum to 1: {self.mixture}")
        if any(k not in self.archetypes for k in self.mixture):
            raise ValueError("mixture references unknown archetype")
        if self.policy.visit_budget_per_worker < 0:
            raise ValueError("visit budget must be >= 0")
        for name, a in self.archetypes.items():
            for p in (a.p_call, a.p_take_nocall, a.p_manual_given_take):
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"{name}: probabilities must be in [0, 1]")
        del weights


@dataclass
class _PatientState:
    """Mutable per-patient state while the simulation runs."""

    record: PatientRecord
    archetype: str
    params: ArchetypeParams
    length: int
    worker_id: str
    phones: list[str]
    shared_phone: Optional[str]
    habit_hour: float
    decline_onset: int
    decline_rate: float
    statuses: list[DoseStatus] = field(default_factory=list)
    call_times: list[list[datetime]] = field(default_factory=list)
    manual_marks: list[int] = field(default_factory=list)
    attention: list[str] = field(default_factory=list)
    note_days: set[int] = field(default_factory=set)
    latent_taken: list[bool] = field(default_factory=list)
    boost_until: int = -1
    boost_value: float = 0.0
    hazard_day: Optional[int] = None
    hazard_outcome: Optional[Outcome] = None

    def day_count(self) -> int:
        return len(self.statuses)


@dataclass(frozen=True)
class Cohort:
    config: SimConfig
    mode: PolicyMode
    patients: tuple[PatientRecord, ...]
    events: tuple[DoseEvent, ...]
    notes: tuple[WorkerNote, ...]
    ledger: InterventionLedger
    calendars: dict[str, AdherenceCalendar]
    timelines: dict[str, AttentionTimeline]
    phone_map: tuple[tuple[str, str], ...]

    def patient(self, patient_id: str) -> PatientRecord:
        for p in self.patients:
            if p.patient_id == patient_id:
                return p
        raise KeyError(patient_id)


class Simulator:
    """Deterministic day-by-day cohort simulation.

    The policy mode must be chosen before ``run``; the generated data and
    ledger are fully determined by (config, mode).
    """

    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        self.mode = PolicyMode.PROXY_RESPECTING
        self._ran = False

    def set_policy_mode(self, mode: PolicyMode) -> None:
        if self._ran:
            raise RuntimeError("policy mode cannot change after the simulation ran")
        self.mode = mode

    # -- patient generation -------------------------------------------------

    def _gen_patients(self, rng: np.random.Generator) -> list[_PatientState]:
        cfg = self.config
        names = sorted(cfg.mixture)
        weights = np.array([cfg.mixture[n] for n in names], dtype=float)
        weights = weights / weights.sum()
        centers_per_unit = max(1, cfg.n_centers // cfg.n_tb_units)

        n_risky = int(cfg.risky_unit_frac * cfg.n_tb_units)
        risky_weights = weights.copy()
        if n_risky and DECLINER in names:
            risky_weights[names.index(DECLINER)] *= cfg.risky_unit_decliner_mult
            risky_weights = risky_weights / risky_weights.sum()
        unit_p = None
        if cfg.unit_size_weights is not None:
            if len(cfg.unit_size_weights) != cfg.n_tb_units:
                raise ValueError("unit_size_weights must have one entry per unit")
            unit_p = np.asarray(cfg.unit_size_weights, dtype=float)
            unit_p = unit_p / unit_p.sum()

        states: list[_PatientState] = []
        phone_counter = 0
        for i in range(cfg.n_patients):
            pid = f"P{i:05d}"
            if unit_p is None:
                unit_idx = int(rng.integers(cfg.n_tb_units))
            else:
                unit_idx = int(rng.choice(cfg.n_tb_units, p=unit_p))
            w = risky_weights if unit_idx < n_risky else weights
            archetype = names[int(rng.choice(len(names), p=w))]
            params = cfg.unit_archetypes.get(unit_idx, {}).get(
                archetype, cfg.archetypes[archetype]
            )
            center_idx = unit_idx * centers_per_unit + int(rng.integers(centers_per_unit))
            enroll = cfg.start_date + timedelta(days=int(rng.integers(cfg.enroll_window_days + 1)))
            if cfg.treatment_days_sd > 0:
                length = int(round(rng.normal(cfg.treatment_days_mean, cfg.treatment_days_sd)))
                length = max(30, length)
            else:
                length = cfg.treatment_days_mean

            phones = [f"98{phone_counter:08d}"]
            phone_counter += 1
            if rng.random() < cfg.extra_phone_prob:
                phones.append(f"98{phone_counter:08d}")
                phone_counter += 1

            onset, rate = 10**9, 0.0
            if params.decline_onset is not None:
                onset = int(rng.integers(params.decline_onset[0], params.decline_onset[1] + 1))
                if params.decline_rate_modes is not None:
                    modes = params.decline_rate_modes
                    lo, hi = modes[int(rng.integers(len(modes)))]
                else:
                    lo, hi = params.decline_rate
                rate = float(rng.uniform(lo, hi))

            record = PatientRecord(
                patient_id=pid,
                enrollment_date=enroll,
                end_date=enroll + timedelta(days=length - 1),
                gender=Gender(rng.choice(["M", "F", "O"], p=[0.55, 0.43, 0.02])),
                age_band=AGE_BANDS[int(rng.integers(len(AGE_BANDS)))],
                weight_band=WEIGHT_BANDS[int(rng.integers(len(WEIGHT_BANDS)))],
                center_id=f"C{center_idx:03d}",
                tb_unit_id=f"U{unit_idx:03d}",
                outcome=Outcome.CURED,  # provisional; finalized after the run
            )
            states.append(
                _PatientState(
                    record=record,
                    archetype=archetype,
                    params=params,
                    length=length,
                    worker_id=f"W{unit_idx:03d}",
                    phones=phones,
                    shared_phone=None,
                    habit_hour=float(rng.uniform(7.0, 20.0)),
                    decline_onset=onset,
                    decline_rate=rate,
                )
            )

        if cfg.shared_phone_injection:
            n_pairs = max(1, int(cfg.shared_phone_frac * cfg.n_patients / 2))
            idx = rng.permutation(cfg.n_patients)[: 2 * n_pairs]
            for k in range(n_pairs):
                shared = f"97{k:08d}"
                states[idx[2 * k]].shared_phone = shared
                states[idx[2 * k + 1]].shared_phone = shared
        return states

    # -- day loop -----------------------------------------------------------

    def _base_call_p(self, st: _PatientState, day_idx: int) -> float:
        params = st.params
        p = params.p_call
        if day_idx < params.novelty_days:
            p = min(1.0, p + params.novelty_boost)
        if day_idx > st.decline_onset:
            p = max(params.p_call_floor, p - st.decline_rate * (day_idx - st.decline_onset))
        return p

    def _call_timestamp(
        self, rng: np.random.Generator, st: _PatientState, day: date
    ) -> datetime:
        params = st.params
        minutes = st.habit_hour * 60 + rng.normal(0.0, params.call_sd_minutes)
        minutes = float(np.clip(minutes, 5 * 60, 23 * 60 + 50))
        return datetime.combine(day, time(int(minutes // 60), int(minutes % 60)))

    def run(self) -> Cohort:
        if self._ran:
            raise RuntimeError("simulator instances are single-use")
        self._ran = True
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        states = self._gen_patients(rng)
        policy = cfg.policy

        first_day = min(st.record.enrollment_date for st in states)
        last_day = max(st.record.end_date for st in states)  # type: ignore[type-var]
        if cfg.horizon_days is not None:
            horizon = first_day + timedelta(days=cfg.horizon_days - 1)
            last_day = min(last_day, horizon)

        ledger: list[InterventionEvent] = []
        notes: list[WorkerNote] = []
        note_counter = 0
        # visits scheduled at end of day d take place on day d+1
        pending: dict[str, list[tuple[_PatientState, InterventionKind]]] = {}

        day = first_day
        while day <= last_day:
            day_key = day.isoformat()
            # deliver interventions scheduled yesterday
            for st, kind in pending.pop(day_key, []):
                ledger.append(InterventionEvent(st.record.patient_id, day, kind))
                if kind is InterventionKind.HOUSE_VISIT:
                    boost, dur = policy.visit_boost, policy.visit_duration_days
                elif kind is InterventionKind.PHONE_CALL:
                    boost, dur = policy.phone_boost, policy.phone_duration_days
                else:
                    boost, dur = policy.sms_boost, policy.sms_duration_days
                t = st.day_count()
                if boost >= st.boost_value or t > st.boost_until:
                    st.boost_value = boost
                    st.boost_until = t + dur - 1
                if kind is InterventionKind.PHONE_CALL and rng.random() < policy.note_prob:
                    st.note_days.add(t)
                    notes.append(
                        WorkerNote(
                            patient_id=st.record.patient_id,
                            worker_id=st.worker_id,
                            unit_id=st.record.tb_unit_id,
                            action="called patient",
                            timestamp=datetime.combine(day, time(10, 0)),
                            note_id=f"N{note_counter:06d}",
                        )
                    )
                    note_counter += 1

            active = [
                st
                for st in states
                if st.record.enrollment_date <= day
                and st.day_count() < st.length
                and st.hazard_day is None
            ]

            for st in active:
                t = st.day_count()
                params = st.params
                boost = st.boost_value if t <= st.boost_until else 0.0
                p_call = min(1.0, self._base_call_p(st, t) + boost * params.boost_response)

                st.call_times.append([])
                st.manual_marks.append(0)
                if rng.random() < p_call:
                    st.statuses.append(DoseStatus.TAKEN_CALL)
                    st.latent_taken.append(True)
                    st.call_times[t].append(self._call_timestamp(rng, st, day))
                    if rng.random() < params.extra_call_prob:
                        st.call_times[t].append(self._call_timestamp(rng, st, day))
                    st.call_times[t].sort()
                else:
                    took = rng.random() < params.p_take_nocall
                    st.latent_taken.append(took)
                    if took and rng.random() < params.p_manual_given_take:
                        st.statuses.append(DoseStatus.TAKEN_MANUAL)
                        st.manual_marks[t] = 1
                        if rng.random() < policy.note_prob:
                            st.note_days.add(t)
                            notes.append(
                                WorkerNote(
                                    patient_id=st.record.patient_id,
                                    worker_id=st.worker_id,
                                    unit_id=st.record.tb_unit_id,
                                    action="manual dose",
                                    timestamp=datetime.combine(day, time(19, 0)),
                                    note_id=f"N{note_counter:06d}",
                                )
                            )
                            note_counter += 1
                    else:
                        st.statuses.append(DoseStatus.MISSED)

                # attention at end of day, from the trailing observed week
                win = st.statuses[max(0, t - 6) : t + 1]
                misses7 = sum(1 for s in win if s is DoseStatus.MISSED)
                noted = any(d in st.note_days for d in range(t - 6, t + 1))
                prev = st.attention[-1] if st.attention else MEDIUM
                if t == 0:
                    st.attention.append(MEDIUM)
                else:
                    st.attention.append(attention_step(misses7, prev, noted))

                # death / loss-to-follow-up hazard driven by latent misses
                latent_misses7 = sum(1 for x in st.latent_taken[max(0, t - 6) : t + 1] if not x)
                hazard = cfg.hazard_base * (1.0 + cfg.hazard_miss_mult * latent_misses7)
                if t >= 14 and rng.random() < hazard:
                    st.hazard_day = t
                    st.hazard_outcome = (
                        Outcome.DIED if rng.random() < 0.5 else Outcome.LOST_TO_FOLLOW_UP
                    )

            # policy pass at end of day: schedule for tomorrow
            tomorrow = day + timedelta(days=1)
            tomorrow_key = tomorrow.isoformat()
            by_worker: dict[str, list[_PatientState]] = {}
            for st in active:
                if st.hazard_day is not None or st.day_count() >= st.length:
                    continue  # leaving the program tonight
                t = st.day_count() - 1
                misses7 = sum(
                    1 for s in st.statuses[max(0, t - 6) : t + 1] if s is DoseStatus.MISSED
                )
                if misses7 == policy.sms_miss_threshold:
                    pending.setdefault(tomorrow_key, []).append((st, InterventionKind.SMS))
                elif policy.phone_miss_range[0] <= misses7 <= policy.phone_miss_range[1]:
                    pending.setdefault(tomorrow_key, []).append(
                        (st, InterventionKind.PHONE_CALL)
                    )
                by_worker.setdefault(st.worker_id, []).append(st)

            for worker_id in sorted(by_worker):
                group = by_worker[worker_id]
                high = [st for st in group if st.attention[-1] == HIGH]

                def _priority(st: _PatientState) -> tuple[int, str]:
                    t = st.day_count() - 1
                    m = sum(
                        1
                        for s in st.statuses[max(0, t - 6) : t + 1]
                        if s is DoseStatus.MISSED
                    )
                    return (-m, st.record.patient_id)

                high.sort(key=_priority)
                for st in high[: policy.visit_budget_per_worker]:
                    pending.setdefault(tomorrow_key, []).append(
                        (st, InterventionKind.HOUSE_VISIT)
                    )
                if self.mode is PolicyMode.ADVERSARIAL:
                    medium = [st for st in group if st.attention[-1] == MEDIUM]
                    if medium and rng.random() < policy.adversarial_visit_prob:
                        pick = medium[int(rng.integers(len(medium)))]
                        pending.setdefault(tomorrow_key, []).append(
                            (pick, InterventionKind.HOUSE_VISIT)
                        )

            day = tomorrow

        return self._finalize(states, ledger, notes, rng)

    # -- outcome assignment and materialization ------------------------------

    def _finalize(
        self,
        states: list[_PatientState],
        ledger: list[InterventionEvent],
        notes: list[WorkerNote],
        rng: np.random.Generator,
    ) -> Cohort:
        cfg = self.config
        patients: list[PatientRecord] = []
        events: list[DoseEvent] = []
        calendars: dict[str, AdherenceCalendar] = {}
        timelines: dict[str, AttentionTimeline] = {}
        phone_map: list[tuple[str, str]] = []
        event_counter = 0

        for st in states:
            n_days = st.day_count()
            if n_days == 0:
                continue
            pid = st.record.patient_id
            enroll = st.record.enrollment_date
            end = enroll + timedelta(days=n_days - 1)

            if st.hazard_day is not None:
                outcome = st.hazard_outcome
            elif n_days < st.length:
                outcome = Outcome.ONGOING  # horizon cut the treatment short
            else:
                frac = sum(st.latent_taken) / n_days
                if frac >= cfg.favorable_take_fraction:
                    outcome = Outcome.CURED if rng.random() < 0.6 else Outcome.TREATMENT_COMPLETE
                else:
                    outcome = Outcome.TREATMENT_FAILED

            record = replace(
                st.record,
                end_date=None if outcome is Outcome.ONGOING else end,
                outcome=outcome,
            )
            patients.append(record)

            for phone in st.phones:
                phone_map.append((phone, pid))
            if st.shared_phone is not None:
                phone_map.append((st.shared_phone, pid))

            own_events: list[DoseEvent] = []
            for t in range(n_days):
                day = enroll + timedelta(days=t)
                for ts in st.call_times[t]:
                    use_shared = st.shared_phone is not None and rng.random() < 0.1
                    own_events.append(
                        DoseEvent(
                            patient_id=pid,
                            dose_date=day,
                            kind=EventKind.CALL,
                            timestamp=ts,
                            phone=st.shared_phone if use_shared else st.phones[0],
                            event_id=f"E{event_counter:07d}",
                        )
                    )
                    event_counter += 1
                if st.manual_marks[t]:
                    own_events.append(
                        DoseEvent(
                            patient_id=pid,
                            dose_date=day,
                            kind=EventKind.MANUAL,
                            timestamp=datetime.combine(day, time(19, 0)),
                            marked_by=st.worker_id,
                            event_id=f"E{event_counter:07d}",
                        )
                    )
                    event_counter += 1

            events.extend(own_events)
            calendars[pid] = build_calendar(record, own_events, through=end)
            timelines[pid] = AttentionTimeline(patient_id=pid, states=tuple(st.attention))

        events.sort(key=lambda e: (e.timestamp, e.event_id or ""))
        ledger.sort(key=lambda ev: (ev.day, ev.patient_id, ev.kind.value))
        return Cohort(
            config=cfg,
            mode=self.mode,
            patients=tuple(patients),
            events=tuple(events),
            notes=tuple(notes),
            ledger=InterventionLedger(events=tuple(ledger)),
            calendars=calendars,
            timelines=timelines,
            phone_map=tuple(sorted(phone_map)),
        )


def simulate_cohort(
    config: SimConfig, mode: PolicyMode = PolicyMode.PROXY_RESPECTING
) -> Cohort:
    sim = Simulator(config)
    sim.set_policy_mode(mode)
    return sim.run()


# -- dataset export ---------------------------------------------------------

TS_FMT = "%Y-%m-%dT%H:%M"


def export_dataset(cohort: Cohort, out_dir: str | Path) -> dict[str, Path]:
    """Write the cohort as the five CSV tables consumed by ingest.

    Manual rows in call_log.csv carry the patient id in the phone column
    (manual marks are entered against a patient, not received from a phone);
    the join recognizes them by kind and passes them through directly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    paths["patients"] = out / "patients.csv"
    with paths["patients"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
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
        )
        for p in cohort.patients:
            w.writerow(
                [
                    p.patient_id,
                    p.enrollment_date.isoformat(),
                    p.end_date.isoformat() if p.end_date else "",
                    p.gender.value,
                    p.age_band,
                    p.weight_band,
                    p.center_id,
                    p.tb_unit_id,
                    p.outcome.value,
                ]
            )

    paths["call_log"] = out / "call_log.csv"
    with paths["call_log"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event_id", "phone", "timestamp", "dose_date", "kind", "marked_by"])
        for e in cohort.events:
            w.writerow(
                [
                    e.event_id,
                    e.phone if e.kind is EventKind.CALL else e.patient_id,
                    e.timestamp.strftime(TS_FMT),
                    e.dose_date.isoformat(),
                    e.kind.value,
                    e.marked_by or "",
                ]
            )

    paths["phone_map"] = out / "phone_map.csv"
    with paths["phone_map"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phone", "patient_id"])
        for phone, pid in cohort.phone_map:
            w.writerow([phone, pid])

    paths["patient_log"] = out / "patient_log.csv"
    with paths["patient_log"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["note_id", "patient_id", "worker_id", "unit_id", "action", "timestamp"])
        for n in cohort.notes:
            w.writerow(
                [
                    n.note_id,
                    n.patient_id,
                    n.worker_id,
                    n.unit_id,
                    n.action,
                    n.timestamp.strftime(TS_FMT),
                ]
            )

    paths["ledger"] = out / "ledger.csv"
    with paths["ledger"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["patient_id", "date", "kind"])
        for ev in cohort.ledger.events:
            w.writerow([ev.patient_id, ev.day.isoformat(), ev.kind.value])

    return paths


def dataset_digest(out_dir: str | Path) -> str:
    """SHA-256 over the exported tables, for reproducibility manifests."""
    h = hashlib.sha256()
    for name in ("patients.csv", "call_log.csv", "phone_map.csv", "patient_log.csv", "ledger.csv"):
        p = Path(out_dir) / name
        if p.exists():
            h.update(p.read_bytes())
    return h.hexdigest()
