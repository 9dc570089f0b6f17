"""Evaluation: ROC/AUC, operating-point tables, cost projection, attribution.

All metrics work on plain score/label arrays so that heuristics, forests,
and networks are compared on identical footing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import AdherenceCalendar, DoseStatus
from .learn.leap import LeapModel, forward_batch
from .tasklab import TaskSample


def roc_curve(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds) swept over the unique scores, descending."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    pos = labels.sum()
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise ValueError("ROC needs at least one positive and one negative label")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(1 - sorted_labels)
    # keep the last index of each tied-score block
    boundary = np.append(sorted_scores[1:] != sorted_scores[:-1], True)
    tpr = np.concatenate([[0.0], tp[boundary] / pos])
    fpr = np.concatenate([[0.0], fp[boundary] / neg])
    thresholds = np.concatenate([[np.inf], sorted_scores[boundary]])
    return fpr, tpr, thresholds


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> tuple[list[tuple[float, float]], float]:
    """ROC points and trapezoidal AUC (rank-equivalent under score ties)."""
    fpr, tpr, _ = roc_curve(scores, labels)
    auc = float(np.trapezoid(tpr, fpr))
    return list(zip(fpr.tolist(), tpr.tolist())), auc


def caught_improvement(
    baseline_tp: float, model_tp: float, baseline_doses: float, model_doses: float
) -> tuple[float, float]:
    """Percent improvements in patients reached and missed doses caught."""
    return (
        100.0 * (model_tp - baseline_tp) / baseline_tp,
        100.0 * (model_doses - baseline_doses) / baseline_doses,
    )


def _misses_before_transition(sample: TaskSample, calendar: AdherenceCalendar) -> int:
    """Missed doses strictly between the anchor and the HIGH transition."""
    if sample.transition_day is None:
        return 0
    return sum(
        1
        for d in range(sample.anchor + 1, sample.transition_day)
        if calendar.statuses[d] is DoseStatus.MISSED
    )


def doses_caught(
    samples: Sequence[TaskSample],
    model_scores: np.ndarray,
    baseline_scores: np.ndarray,
    calendars: dict[str, AdherenceCalendar],
    baseline_threshold: float = 3,
) -> dict:
    """Compare patients reached and missed doses caught at a fixed FPR.

    The baseline operates at ``score >= baseline_threshold``; the model's
    threshold is the one reaching the most true positives while keeping FPR
    at or under the baseline's. Doses caught counts, per true positive, the
    misses that occur before the patient turns HIGH.
    """
    labels = np.array([s.label for s in samples], dtype=int)
    model_scores = np.asarray(model_scores, dtype=float)
    baseline_scores = np.asarray(baseline_scores, dtype=float)
    neg = (labels == 0).sum()
    if neg == 0:
        raise ValueError("no negatives: the FPR anchor is undefined")

    base_pred = baseline_scores >= baseline_threshold
    base_fpr = (base_pred & (labels == 0)).sum() / neg

    fpr, tpr, thresholds = roc_curve(model_scores, labels)
    ok = fpr <= base_fpr + 1e-12
    if not ok.any():
        raise ValueError(f"model cannot reach FPR <= {base_fpr:.3f}")
    best = int(np.flatnonzero(ok)[np.argmax(tpr[ok])])
    model_thr = thresholds[best]
    model_pred = model_scores >= model_thr

    def _tally(pred: np.ndarray) -> tuple[int, int]:
        tps = 0
        doses = 0
        for s, p, lab in zip(samples, pred, labels):
            if p and lab == 1:
                tps += 1
                doses += _misses_before_transition(s, calendars[s.patient_id])
        return tps, doses

    base_tp, base_doses = _tally(base_pred)
    model_tp, model_doses = _tally(model_pred)
    imp_tp, imp_doses = (
        caught_improvement(base_tp, model_tp, base_doses, model_doses)
        if base_tp and base_doses
        else (0.0, 0.0)
    )
    return {
        "fpr_anchor": float(base_fpr),
        "model_threshold": float(model_thr),
        "baseline": {"true_positives": base_tp, "doses_caught": base_doses},
        "model": {"true_positives": model_tp, "doses_caught": model_doses},
        "improvement_tp_pct": imp_tp,
        "improvement_doses_pct": imp_doses,
    }


def fpr_at_tpr(scores: np.ndarray, labels: np.ndarray, target_tpr: float) -> float:
    """Smallest FPR among thresholds reaching at least the target TPR."""
    fpr, tpr, _ = roc_curve(scores, labels)
    ok = tpr >= target_tpr - 1e-12
    if not ok.any():
        raise ValueError(f"TPR {target_tpr} unreachable")
    return float(fpr[ok].min())


def fpr_matched_table(
    scores_a: np.ndarray,
    scores_b: np.ndarray,
    labels: np.ndarray,
    tprs: Sequence[float] = (0.75, 0.80, 0.90),
) -> list[dict]:
    """Per target TPR: each method's FPR and b's relative improvement over a."""
    rows = []
    for t in tprs:
        fa = fpr_at_tpr(scores_a, labels, t)
        fb = fpr_at_tpr(scores_b, labels, t)
        improvement = 100.0 * (fa - fb) / fa if fa > 0 else 0.0
        rows.append(
            {"tpr": t, "fpr_a": fa, "fpr_b": fb, "improvement_pct": improvement}
        )
    return rows


def cost_projection(
    n_patients: float,
    unfavorable_rate: float,
    tpr_target: float,
    fpr_a: float,
    fpr_b: float,
    patients_per_worker: float,
    salary: float,
) -> dict:
    """Staffing cost saved by the lower-FPR method at a fixed catch rate.

    False positives are patients staffed unnecessarily; the savings are the
    worker salaries freed by the false positives avoided.
    """
    for rate in (unfavorable_rate, tpr_target, fpr_a, fpr_b):
        if not 0.0 <= rate <= 1.0:
            raise ValueError("rates must be within [0, 1]")
    positives = n_patients * unfavorable_rate
    negatives = n_patients - positives
    tp = tpr_target * positives
    fp_a = fpr_a * negatives
    fp_b = fpr_b * negatives
    workers_saved = (fp_a - fp_b) / patients_per_worker
    return {
        "positives": positives,
        "true_positives": tp,
        "false_positives_a": fp_a,
        "false_positives_b": fp_b,
        "workers_saved": workers_saved,
        "savings": workers_saved * salary,
    }


@dataclass(frozen=True)
class AttributionBackground:
    """Neutral replacement values drawn from the training set."""

    mean_call_bit: float
    median_static: np.ndarray


def occlusion_attribution(
    model: LeapModel,
    x_seq: np.ndarray,
    x_stat: np.ndarray,
    background: AttributionBackground,
    cum_scale: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-day and per-feature contribution scores by neutral replacement.

    Day d's score is the prediction drop when its taken/missed bit is
    replaced by the training-set mean bit; the cumulative-miss channel is
    recomputed for days d onward (``cum_scale`` is the factor the raw
    lifetime counts were multiplied by, 1/(anchor+1)). Feature scores
    replace one static with its training median. Positive values push the
    prediction toward label 1.
    """
    x_seq = np.asarray(x_seq, dtype=float)
    x_stat = np.asarray(x_stat, dtype=float)
    k = x_seq.shape[0]
    base, _ = forward_batch(model, x_seq[None], x_stat[None])
    base = base[0]

    day_attr = np.zeros(k)
    for d in range(k):
        occ = x_seq.copy()
        bit = occ[d, 0]
        occ[d, 0] = background.mean_call_bit
        # day d's miss contribution changes from (1 - bit) to (1 - mean)
        occ[d:, 1] = np.maximum(
            occ[d:, 1] + (bit - background.mean_call_bit) * cum_scale, 0.0
        )
        p, _ = forward_batch(model, occ[None], x_stat[None])
        day_attr[d] = float((base - p[0]).sum())

    feat_attr = np.zeros(len(x_stat))
    for j in range(len(x_stat)):
        occ = x_stat.copy()
        occ[j] = background.median_static[j]
        p, _ = forward_batch(model, x_seq[None], occ[None])
        feat_attr[j] = float((base - p[0]).sum())
    return day_attr, feat_attr


def prediction_correlation(
    predicted: np.ndarray, true: np.ndarray, only_true_above: Optional[float] = None
) -> float:
    """Pearson correlation between paired reward values, optionally keeping
    only pairs whose true value exceeds a threshold."""
    predicted = np.asarray(predicted, dtype=float).reshape(-1)
    true = np.asarray(true, dtype=float).reshape(-1)
    if only_true_above is not None:
        keep = true > only_true_above
        predicted, true = predicted[keep], true[keep]
    if len(true) < 2:
        raise ValueError("need at least two pairs")
    ps = predicted.std()
    ts = true.std()
    if ps == 0 or ts == 0:
        raise ValueError("zero variance input")
    return float(((predicted - predicted.mean()) * (true - true.mean())).mean() / (ps * ts))
