"""Seeded synthetic benchmarks used by the acceptance suite and scripts.

Three experiments, each on a cohort whose generative knobs plant the kind
of signal the corresponding claim is about:

* risk ordering: a Sporadic/Decliner cohort where decliners collapse fast
  enough that the position of misses inside the week carries label signal
  beyond the raw count;
* LCFO: a cohort with a non-calling adherent segment that accumulates
  manual marks from day one;
* planning: a cohort with decliner-heavy locations, where training through
  the planner should beat two-stage training on realized interventions.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta
from typing import Sequence

import numpy as np

from .evalkit import roc_auc
from .featurize import CategoryCodec
from .learn import LeapConfig
from .learn.leap import init_leap
from .pipeline import TrainedTask, train_task
from .plan import (
    WeekInstance,
    dfl_train,
    evaluate_plan,
    lw_misses_coefficients,
    predict_coefficients,
    solve_plan,
    two_stage_train,
    week_instance,
)
from .simkit import (
    ArchetypeParams,
    Cohort,
    DECLINER,
    SPORADIC,
    STEADY,
    SimConfig,
    simulate_cohort,
)
from .tasklab import Task


def risk_benchmark_config(n_patients: int = 1000, seed: int = 7) -> SimConfig:
    """Sporadic/Decliner cohort with cliff-shaped decliner collapse."""
    return SimConfig(
        n_patients=n_patients,
        mixture={SPORADIC: 0.5, DECLINER: 0.5},
        archetypes={
            SPORADIC: ArchetypeParams(
                p_call=0.65,
                p_take_nocall=0.45,
                p_manual_given_take=0.06,
                call_sd_minutes=240.0,
            ),
            DECLINER: ArchetypeParams(
                p_call=0.92,
                p_take_nocall=0.30,
                p_manual_given_take=0.05,
                decline_onset=(15, 150),
                decline_rate=(0.10, 0.20),
                call_sd_minutes=25.0,
            ),
        },
        treatment_days_mean=180,
        seed=seed,
    )


def lcfo_benchmark_config(n_patients: int = 1200, seed: int = 17) -> SimConfig:
    """Default archetype mix with the 15% non-calling adherent segment."""
    return SimConfig(n_patients=n_patients, treatment_days_mean=180, seed=seed)


@dataclass
class RiskBenchmark:
    cohort: Cohort
    bundle: TrainedTask
    auc_lw: float
    auc_forest: float
    auc_leap: float


def run_risk_benchmark(n_patients: int = 1000, seed: int = 7) -> RiskBenchmark:
    cohort = simulate_cohort(risk_benchmark_config(n_patients, seed))
    bundle = train_task(cohort, Task.RISK, seed=seed)
    labels = bundle.labels()
    _, auc_lw = roc_auc(bundle.scores("lw_misses"), labels)
    _, auc_rf = roc_auc(bundle.scores("forest"), labels)
    _, auc_leap = roc_auc(bundle.scores("leap"), labels)
    return RiskBenchmark(
        cohort=cohort, bundle=bundle, auc_lw=auc_lw, auc_forest=auc_rf, auc_leap=auc_leap
    )


@dataclass
class LcfoBenchmark:
    cohort: Cohort
    bundle: TrainedTask
    auc_lw_manual: float
    auc_lw_misses: float


def run_lcfo_benchmark(n_patients: int = 1200, seed: int = 17) -> LcfoBenchmark:
    cohort = simulate_cohort(lcfo_benchmark_config(n_patients, seed))
    bundle = train_task(cohort, Task.LCFO, seed=seed, with_leap=False, with_forest=False)
    labels = bundle.labels()
    _, auc_manual = roc_auc(bundle.scores("lw_manual"), labels)
    _, auc_misses = roc_auc(bundle.scores("lw_misses"), labels)
    return LcfoBenchmark(
        cohort=cohort, bundle=bundle, auc_lw_manual=auc_manual, auc_lw_misses=auc_misses
    )


# -- planning benchmark ----------------------------------------------------------


def dfl_benchmark_config(n_patients: int = 2000, seed: int = 29) -> SimConfig:
    """Cohort with decliner-concentrated locations for the planning task.

    The four risky units split into two reward profiles: fast-collapse
    decliners whose success window closes within a day or two (visits must
    land early in the week) and slow decliners who stay reachable all week.
    Getting the visit-day allocation right across profiles is what
    separates planning-aware training from plain calibration.
    """
    base = risk_benchmark_config(n_patients, seed)
    bimodal_decliner = ArchetypeParams(
        p_call=0.92,
        p_take_nocall=0.30,
        p_manual_given_take=0.05,
        decline_onset=(15, 150),
        decline_rate=(0.10, 0.20),
        decline_rate_modes=((0.35, 0.60), (0.05, 0.09)),
        call_sd_minutes=25.0,
    )
    return SimConfig(
        n_patients=n_patients,
        mixture={STEADY: 0.35, SPORADIC: 0.35, DECLINER: 0.30},
        archetypes={
            STEADY: ArchetypeParams(
                p_call=0.92, p_take_nocall=0.5, p_manual_given_take=0.05, call_sd_minutes=20.0
            ),
            SPORADIC: base.archetypes[SPORADIC],
            DECLINER: bimodal_decliner,
        },
        n_tb_units=8,
        n_centers=24,
        treatment_days_mean=180,
        enroll_window_days=0,
        risky_unit_frac=0.5,
        risky_unit_decliner_mult=4.0,
        unit_size_weights=(1.0, 1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 4.0),
        seed=seed,
    )


@dataclass
class PlanningBenchmark:
    n_instances: int
    mean_success_lw: float
    mean_success_two_stage: float
    mean_success_dfl: float
    mean_success_optimal: float
    auc_two_stage: float
    auc_dfl: float
    corr_two_stage: float
    corr_dfl: float
    corr_two_stage_high: float
    corr_dfl_high: float


def build_week_instances(
    cohort: Cohort,
    group_size: int = 100,
    week_offsets: Sequence[int] = (21, 35, 49, 63),
    seed: int = 0,
) -> list[WeekInstance]:
    """Random patient groups crossed with week anchors.

    Patients whose observed span misses a week's input or label days drop
    out of that instance; groups stay otherwise intact across weeks.
    """
    codec = CategoryCodec.from_patients(cohort.patients)
    rng = np.random.default_rng(seed)
    pids = [p.patient_id for p in cohort.patients]
    rng.shuffle(pids)
    groups = [pids[i : i + group_size] for i in range(0, len(pids), group_size)]
    groups = [g for g in groups if len(g) == group_size]

    base = min(p.enrollment_date for p in cohort.patients)
    instances = []
    for offset in week_offsets:
        week_start = base + timedelta(days=offset)
        for group in groups:
            alive = []
            for pid in group:
                cal = cohort.calendars[pid]
                t0 = cal.day_index(week_start)
                if t0 >= 6 and t0 + 7 < cal.n_days:
                    alive.append(pid)
            if len(alive) >= group_size // 2:
                instances.append(week_instance(cohort, week_start, alive, codec))
    return instances


def _mean_success(instances: Sequence[WeekInstance], plans) -> float:
    return float(
        np.mean([evaluate_plan(p, w.c_true, w.loc_idx) for p, w in zip(plans, instances)])
    )


def run_planning_benchmark(
    n_patients: int = 2000,
    seed: int = 29,
    gamma: float = 1.0,
    dfl_epochs: int = 15,
    dfl_lr: float = 3e-4,
    test_frac: float = 0.3,
) -> PlanningBenchmark:
    """Train the week-ahead success predictor two ways and compare plans.

    The two-stage model trains on class-balanced cross-entropy against the
    true success coefficients (the same balancing step every task pipeline
    applies); the decision-focused model starts from those weights and
    fine-tunes through the smoothed planner. Both are evaluated with the
    exact solver on held-out instances against ground truth.
    """
    cohort = simulate_cohort(dfl_benchmark_config(n_patients, seed))
    instances = build_week_instances(cohort, seed=seed + 1)
    rng = np.random.default_rng(seed + 2)
    order = rng.permutation(len(instances))
    n_test = max(1, int(round(test_frac * len(instances))))
    test_idx = set(order[:n_test].tolist())
    train_set = [w for i, w in enumerate(instances) if i not in test_idx]
    test_set = [w for i, w in enumerate(instances) if i in test_idx]

    config = LeapConfig(
        lstm_hidden=64, dense_in_units=100, penult_units=16, batch=128, epochs=20, seed=seed + 3
    )
    two_stage, _ = two_stage_train(config, train_set)

    dfl_model = init_leap(config, n_static=29, out_dim=7)
    for k, v in two_stage.params.items():
        dfl_model.params[k] = v.copy()
    dfl_model, _ = dfl_train(
        dfl_model, train_set, gamma=gamma, epochs=dfl_epochs, lr=dfl_lr, seed=seed + 4
    )

    def plans_for(predict) -> list:
        return [solve_plan(w.instance_from(predict(w))) for w in test_set]

    lw_plans = plans_for(lambda w: lw_misses_coefficients(w.X_seq, tau=1))
    ts_plans = plans_for(lambda w: predict_coefficients(two_stage, w))
    dfl_plans = plans_for(lambda w: predict_coefficients(dfl_model, w))
    opt_plans = [solve_plan(w.true_instance) for w in test_set]

    c_true = np.concatenate([w.c_true.reshape(-1) for w in test_set])
    c_ts = np.concatenate([predict_coefficients(two_stage, w).reshape(-1) for w in test_set])
    c_dfl = np.concatenate([predict_coefficients(dfl_model, w).reshape(-1) for w in test_set])
    _, auc_ts = roc_auc(c_ts, c_true.astype(int))
    _, auc_dfl = roc_auc(c_dfl, c_true.astype(int))

    from .evalkit import prediction_correlation

    r_true = np.concatenate([w.true_instance.r.reshape(-1) for w in test_set])
    r_ts = np.concatenate(
        [w.instance_from(predict_coefficients(two_stage, w)).r.reshape(-1) for w in test_set]
    )
    r_dfl = np.concatenate(
        [w.instance_from(predict_coefficients(dfl_model, w)).r.reshape(-1) for w in test_set]
    )

    return PlanningBenchmark(
        n_instances=len(instances),
        mean_success_lw=_mean_success(test_set, lw_plans),
        mean_success_two_stage=_mean_success(test_set, ts_plans),
        mean_success_dfl=_mean_success(test_set, dfl_plans),
        mean_success_optimal=_mean_success(test_set, opt_plans),
        auc_two_stage=auc_ts,
        auc_dfl=auc_dfl,
        corr_two_stage=prediction_correlation(r_ts, r_true),
        corr_dfl=prediction_correlation(r_dfl, r_true),
        corr_two_stage_high=prediction_correlation(r_ts, r_true, only_true_above=1.0),
        corr_dfl_high=prediction_correlation(r_dfl, r_true, only_true_above=1.0),
    )
