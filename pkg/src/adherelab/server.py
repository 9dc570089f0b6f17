"""JSON-over-HTTP service backing the triage and planning dashboard.

The service owns a fully materialized cohort and reveals it one day at a
time: the cursor is the operator's "today", and stepping the simulation
moves the cursor forward. Reads are concurrent; plan choices and stepping
serialize through one lock. Training artifacts are never mutated.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .core import DoseStatus
from .evalkit import occlusion_attribution
from .featurize import FEATURE_NAMES, CategoryCodec, PercentileScaler, static_features
from .learn.leap import LeapModel, forward_batch
from .pipeline import load_cohort
from .plan import WEEK_DAYS, build_instance, solve_plan, true_coefficients
from .simkit import Cohort


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class PlanSession:
    week_start: date
    patient_ids: list[str]
    locations: tuple[str, ...]
    loc_idx: np.ndarray
    c_true: np.ndarray
    r_hat: list[list[float]]
    chosen: dict[int, str] = field(default_factory=dict)  # day (1-7) -> location


@dataclass
class ServeState:
    cohort: Cohort
    codec: CategoryCodec
    cursor: date
    model: Optional[LeapModel] = None
    scaler: Optional[PercentileScaler] = None
    background: Optional[object] = None
    plan: Optional[PlanSession] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def horizon(self) -> date:
        return max(c.end for c in self.cohort.calendars.values())


def build_state(data_dir: str | Path, model_dir: Optional[str | Path] = None) -> ServeState:
    cohort = load_cohort(data_dir)
    if not cohort.patients:
        raise ApiError(503, "no_cohort", f"no usable patients under {data_dir}")
    codec = CategoryCodec.from_patients(cohort.patients)
    start = min(p.enrollment_date for p in cohort.patients) + timedelta(days=14)
    state = ServeState(cohort=cohort, codec=codec, cursor=start)
    if model_dir is not None:
        model_path = Path(model_dir) / "leap.json"
        scaler_path = Path(model_dir) / "scaler.json"
        if model_path.exists() and scaler_path.exists():
            state.model = LeapModel.load(model_path)
            state.scaler = PercentileScaler.load(scaler_path)

    # occlusion background: cohort-wide taken rate for the bit channel; the
    # percentile-scaled feature median is 0.5 by construction
    from .evalkit import AttributionBackground

    taken = [s.taken for cal in cohort.calendars.values() for s in cal.statuses]
    state.background = AttributionBackground(
        mean_call_bit=float(np.mean(taken)) if taken else 0.5,
        median_static=np.full(len(FEATURE_NAMES), 0.5),
    )
    return state


def _day_slice(state: ServeState, pid: str):
    cal = state.cohort.calendars[pid]
    last = min(cal.day_index(state.cursor), cal.n_days - 1)
    return cal, last


def _risk_inputs(state: ServeState, pid: str):
    cal, last = _day_slice(state, pid)
    if last < WEEK_DAYS - 1:
        raise ApiError(409, "too_early", f"{pid} has under {WEEK_DAYS} observed days")
    lo, hi = last - WEEK_DAYS + 1, last
    bits = [1 if cal.statuses[d].taken else 0 for d in range(lo, hi + 1)]
    cum = np.cumsum([s is DoseStatus.MISSED for s in cal.statuses[: hi + 1]])
    x_seq = np.stack([bits, cum[lo : hi + 1] / (hi + 1)], axis=1).astype(float)
    patient = state.cohort.patient(pid)
    raw = static_features(cal, patient, lo, hi, state.codec)
    x_stat = state.scaler.transform(raw) if state.scaler is not None else raw
    return x_seq, x_stat, hi


def _risk_score(state: ServeState, pid: str) -> Optional[float]:
    if state.model is None:
        return None
    try:
        x_seq, x_stat, _ = _risk_inputs(state, pid)
    except ApiError:
        return None
    probs, _ = forward_batch(state.model, x_seq[None], np.asarray(x_stat)[None])
    return float(probs[0, 0])


def _attention_today(state: ServeState, pid: str) -> str:
    cal, last = _day_slice(state, pid)
    return state.cohort.timelines[pid].state(last)


def _plan_week_patients(state: ServeState) -> list[str]:
    out = []
    for p in state.cohort.patients:
        cal = state.cohort.calendars[p.patient_id]
        t0 = cal.day_index(state.cursor)
        if t0 >= WEEK_DAYS - 1 and t0 + WEEK_DAYS < cal.n_days:
            out.append(p.patient_id)
    return out


def _predicted_rewards(state: ServeState, pids: list[str], locations, loc_idx) -> np.ndarray:
    r = np.zeros((len(locations), WEEK_DAYS))
    if state.model is not None:
        for j, pid in enumerate(pids):
            x_seq, x_stat, _ = _risk_inputs(state, pid)
            probs, _ = forward_batch(state.model, x_seq[None], np.asarray(x_stat)[None])
            score = float(probs[0, 0])
            r[loc_idx[j], :] += score
    else:
        for j, pid in enumerate(pids):
            cal, last = _day_slice(state, pid)
            misses = sum(
                1
                for d in range(last - WEEK_DAYS + 1, last + 1)
                if cal.statuses[d] is DoseStatus.MISSED
            )
            if misses >= 1:
                r[loc_idx[j], :] += 1.0
    return r


def _ensure_plan(state: ServeState) -> PlanSession:
    if state.plan is not None:
        return state.plan
    pids = _plan_week_patients(state)
    if not pids:
        raise ApiError(503, "no_plan_week", "no patients cover a full planning week at the cursor")
    c_true = true_coefficients(state.cohort, state.cursor, pids)
    locs = [state.cohort.patient(pid).tb_unit_id for pid in pids]
    instance, loc_idx = build_instance(locs, c_true)
    r_hat = _predicted_rewards(state, pids, instance.locations, loc_idx)
    state.plan = PlanSession(
        week_start=state.cursor,
        patient_ids=pids,
        locations=instance.locations,
        loc_idx=loc_idx,
        c_true=c_true,
        r_hat=r_hat.tolist(),
    )
    return state.plan


def _realized(state: ServeState, session: PlanSession) -> dict:
    """Successful interventions among chosen days the cursor has revealed."""
    revealed_days = (state.cursor - session.week_start).days
    per_day = {}
    total = 0
    counted = np.zeros(len(session.patient_ids), dtype=bool)
    for day, loc in sorted(session.chosen.items()):
        if day > revealed_days:
            continue
        li = session.locations.index(loc)
        hits = 0
        for j in range(len(session.patient_ids)):
            if counted[j]:
                continue
            if session.loc_idx[j] == li and session.c_true[j, day - 1] == 1:
                counted[j] = True
                hits += 1
        per_day[str(day)] = hits
        total += hits
    return {"revealed_days": min(revealed_days, WEEK_DAYS), "per_day": per_day, "total": total}


def _plan_payload(state: ServeState, session: PlanSession) -> dict:
    return {
        "week_start": session.week_start.isoformat(),
        "days": WEEK_DAYS,
        "locations": list(session.locations),
        "predicted_rewards": session.r_hat,
        "chosen": {str(d): loc for d, loc in session.chosen.items()},
        "realized": _realized(state, session),
        "n_patients": len(session.patient_ids),
    }


def create_app(state: ServeState) -> FastAPI:
    app = FastAPI(title="adherelab", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def api_error_handler(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.get("/api/cohort")
    def cohort_view():
        patients = []
        for p in state.cohort.patients:
            if p.enrollment_date > state.cursor:
                continue
            cal, last = _day_slice(state, p.patient_id)
            week = cal.statuses[max(0, last - 27) : last + 1]
            patients.append(
                {
                    "patient_id": p.patient_id,
                    "attention": _attention_today(state, p.patient_id),
                    "risk_score": _risk_score(state, p.patient_id),
                    "tb_unit_id": p.tb_unit_id,
                    "center_id": p.center_id,
                    "enrollment_date": p.enrollment_date.isoformat(),
                    "days_observed": last + 1,
                    "missed_28d": sum(1 for s in week if s is DoseStatus.MISSED),
                }
            )
        return {"today": state.cursor.isoformat(), "patients": patients}

    @app.get("/api/patients/{pid}")
    def patient_view(pid: str):
        if pid not in state.cohort.calendars:
            raise ApiError(404, "unknown_patient", f"no patient {pid}")
        cal, last = _day_slice(state, pid)
        tl = state.cohort.timelines[pid]
        days = [
            {
                "date": cal.date_at(d).isoformat(),
                "status": cal.statuses[d].value,
                "attention": tl.state(d),
                "calls": len(cal.call_times[d]),
            }
            for d in range(last + 1)
        ]
        patient = state.cohort.patient(pid)
        features = None
        if last >= WEEK_DAYS - 1:
            raw = static_features(cal, patient, last - WEEK_DAYS + 1, last, state.codec)
            features = dict(zip(FEATURE_NAMES, raw.tolist()))
        return {
            "patient_id": pid,
            "gender": patient.gender.value,
            "age_band": patient.age_band,
            "weight_band": patient.weight_band,
            "center_id": patient.center_id,
            "tb_unit_id": patient.tb_unit_id,
            "features": features,
            "days": days,
        }

    @app.get("/api/patients/{pid}/risk")
    def patient_risk(pid: str):
        if pid not in state.cohort.calendars:
            raise ApiError(404, "unknown_patient", f"no patient {pid}")
        if state.model is None or state.scaler is None:
            raise ApiError(503, "no_model", "no trained model artifact is loaded")
        x_seq, x_stat, hi = _risk_inputs(state, pid)
        probs, _ = forward_batch(state.model, x_seq[None], np.asarray(x_stat)[None])
        day_attr, feat_attr = occlusion_attribution(
            state.model, x_seq, np.asarray(x_stat), state.background, 1.0 / (hi + 1)
        )
        return {
            "patient_id": pid,
            "score": float(probs[0, 0]),
            "window_end": state.cohort.calendars[pid].date_at(hi).isoformat(),
            "day_attribution": day_attr.tolist(),
            "feature_attribution": feat_attr.tolist(),
            "feature_names": list(FEATURE_NAMES),
        }

    @app.get("/api/plan/instance")
    def plan_instance():
        with state.lock:
            session = _ensure_plan(state)
            return _plan_payload(state, session)

    @app.get("/api/plan/optimal")
    def plan_optimal():
        with state.lock:
            session = _ensure_plan(state)
        instance, _ = build_instance(
            [state.cohort.patient(p).tb_unit_id for p in session.patient_ids], session.c_true
        )
        plan = solve_plan(instance)
        return {
            "objective": plan.objective,
            "x": plan.x.tolist(),
            "assignments": [
                {"day": t + 1, "location": instance.locations[i]} for t, i in plan.assignments
            ],
            "locations": list(instance.locations),
        }

    @app.post("/api/plan/choose")
    def plan_choose(body: dict):
        day = body.get("day")
        loc = body.get("location")
        with state.lock:
            session = _ensure_plan(state)
            if not isinstance(day, int) or not 1 <= day <= WEEK_DAYS:
                raise ApiError(400, "bad_day", f"day must be an integer in [1, {WEEK_DAYS}]")
            if loc not in session.locations:
                raise ApiError(400, "bad_location", f"unknown location {loc!r}")
            if day in session.chosen:
                raise ApiError(409, "day_taken", f"day {day} already has a visit")
            if loc in session.chosen.values():
                raise ApiError(409, "location_taken", f"location {loc} is already visited")
            session.chosen[day] = loc
            return _plan_payload(state, session)

    @app.post("/api/plan/reset")
    def plan_reset():
        with state.lock:
            state.plan = None
            session = _ensure_plan(state)
            return _plan_payload(state, session)

    @app.post("/api/sim/step")
    def sim_step(body: dict):
        days = body.get("days", 1)
        if not isinstance(days, int) or days < 1:
            raise ApiError(400, "bad_days", "days must be a positive integer")
        with state.lock:
            state.cursor = min(state.cursor + timedelta(days=days), state.horizon)
            payload = {"today": state.cursor.isoformat()}
            if state.plan is not None:
                payload["plan"] = _plan_payload(state, state.plan)
            return payload

    return app
