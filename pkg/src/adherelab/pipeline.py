"""End-to-end task pipelines shared by the CLI, benchmarks, and server.

A cohort can come straight from the simulator or be reconstructed from an
exported data directory; downstream steps (labeling, scaling, resampling,
training, scoring) are identical either way.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .attention import attention_timeline
from .featurize import (
    CategoryCodec,
    PercentileScaler,
    fit_percentiles,
    smote_with_origins,
)
from .ingest import ingest_dir
from .learn import (
    ForestConfig,
    LeapConfig,
    forest_predict,
    forest_train,
    heuristic_score,
    leap_train,
    sample_arrays,
)
from .learn.forest import Forest, LCFO_FOREST, OUTCOME_FOREST, RISK_FOREST
from .learn.leap import LCFO_LEAP, OUTCOME_LEAP, RISK_LEAP, LeapModel, forward_batch
from .simkit import Cohort, InterventionEvent, InterventionKind, InterventionLedger
from .tasklab import (
    Task,
    TaskSample,
    gen_lcfo_samples,
    gen_outcome_samples,
    gen_risk_samples,
    split,
)

TASK_GENERATORS = {
    Task.RISK: gen_risk_samples,
    Task.OUTCOME: gen_outcome_samples,
    Task.LCFO: gen_lcfo_samples,
}
LEAP_PRESETS = {Task.RISK: RISK_LEAP, Task.OUTCOME: OUTCOME_LEAP, Task.LCFO: LCFO_LEAP}
FOREST_PRESETS = {Task.RISK: RISK_FOREST, Task.OUTCOME: OUTCOME_FOREST, Task.LCFO: LCFO_FOREST}


def load_ledger(path: str | Path) -> InterventionLedger:
    events = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["patient_id", "date", "kind"]:
            raise ValueError(f"unexpected ledger header {header}")
        for pid, day, kind in reader:
            events.append(
                InterventionEvent(
                    patient_id=pid,
                    day=datetime.strptime(day, "%Y-%m-%d").date(),
                    kind=InterventionKind(kind),
                )
            )
    return InterventionLedger(events=tuple(events))


def load_cohort(data_dir: str | Path, through: Optional[date] = None) -> Cohort:
    """Rebuild a cohort from exported tables; attention timelines are
    recomputed from the calendars and worker notes."""
    data = ingest_dir(data_dir, through=through)
    notes_by_pid: dict[str, list] = {}
    for n in data.notes:
        notes_by_pid.setdefault(n.patient_id, []).append(n)
    timelines = {
        pid: attention_timeline(cal, notes_by_pid.get(pid, ()))
        for pid, cal in data.calendars.items()
    }
    ledger_path = Path(data_dir) / "ledger.csv"
    ledger = load_ledger(ledger_path) if ledger_path.exists() else InterventionLedger(())
    patients = tuple(p for p in data.patients if p.patient_id in data.calendars)
    phone_map = tuple(sorted((ph, pid) for ph, pid in data.dedup.clean_map.items()))
    return Cohort(
        config=None,
        mode=None,
        patients=patients,
        events=tuple(e for evs in data.join.events.values() for e in evs),
        notes=tuple(data.notes),
        ledger=ledger,
        calendars=data.calendars,
        timelines=timelines,
        phone_map=phone_map,
    )


@dataclass
class TrainedTask:
    """Everything a task evaluation needs, in one bundle."""

    task: Task
    codec: CategoryCodec
    scaler: PercentileScaler
    train: list[TaskSample]
    test: list[TaskSample]
    leap: Optional[LeapModel] = None
    forest: Optional[Forest] = None
    leap_losses: Optional[list[float]] = None

    def scores(self, kind: str, samples: Optional[Sequence[TaskSample]] = None) -> np.ndarray:
        """Score samples (default: the test split) with a trained model or
        one of the heuristic rules."""
        samples = self.test if samples is None else samples
        if kind in ("lw_misses", "t_misses", "lw_manual"):
            return np.array([heuristic_score(kind, s) for s in samples], dtype=float)
        if kind == "forest":
            X = self.scaler.transform(np.stack([s.static for s in samples]))
            return forest_predict(self.forest, X)
        if kind == "leap":
            X_seq, X_stat, _ = sample_arrays(samples, self.scaler)
            probs, _ = forward_batch(self.leap, X_seq, X_stat)
            return probs[:, 0]
        raise ValueError(f"unknown scorer {kind!r}")

    def labels(self, samples: Optional[Sequence[TaskSample]] = None) -> np.ndarray:
        samples = self.test if samples is None else samples
        return np.array([s.label for s in samples], dtype=int)


def train_task(
    cohort: Cohort,
    task: Task,
    seed: int = 0,
    with_leap: bool = True,
    with_forest: bool = True,
    leap_config: Optional[LeapConfig] = None,
    forest_config: Optional[ForestConfig] = None,
    test_frac: float = 0.25,
) -> TrainedTask:
    """Label, split by patient, percentile-scale, balance with SMOTE, and
    fit the requested models with their per-task presets."""
    codec = CategoryCodec.from_patients(cohort.patients)
    samples = TASK_GENERATORS[task](cohort, codec=codec)
    if not samples:
        raise ValueError(f"no samples generated for task {task.value}")
    train, test = split(samples, test_frac=test_frac, seed=seed)
    scaler = fit_percentiles(np.stack([s.static for s in train]))
    out = TrainedTask(task=task, codec=codec, scaler=scaler, train=train, test=test)

    X_seq, X_stat, y = sample_arrays(train, scaler)
    y_int = y.astype(int)
    if len(np.unique(y_int)) > 1:
        X_stat_bal, y_bal, origins = smote_with_origins(X_stat, y_int, seed=seed + 1)
        X_seq_bal = (
            np.vstack([X_seq, X_seq[origins[:, 0]]]) if len(origins) else X_seq.copy()
        )
    else:
        X_stat_bal, y_bal, X_seq_bal = X_stat, y_int, X_seq

    if with_forest:
        cfg = forest_config or FOREST_PRESETS[task]
        cfg = ForestConfig(n_trees=cfg.n_trees, max_depth=cfg.max_depth, seed=seed + 2)
        out.forest = forest_train(cfg, X_stat_bal, y_bal)
    if with_leap:
        cfg = leap_config or LEAP_PRESETS[task]
        cfg = LeapConfig(
            lstm_hidden=cfg.lstm_hidden,
            dense_in_units=cfg.dense_in_units,
            penult_units=cfg.penult_units,
            batch=cfg.batch,
            epochs=cfg.epochs,
            lr=cfg.lr,
            seed=seed + 3,
        )
        out.leap, out.leap_losses = leap_train(cfg, X_seq_bal, X_stat_bal, y_bal.astype(float))
    return out


def attribution_background(bundle: TrainedTask):
    """Neutral replacement values from the training split."""
    from .evalkit import AttributionBackground

    X_seq, X_stat, _ = sample_arrays(bundle.train, bundle.scaler)
    return AttributionBackground(
        mean_call_bit=float(X_seq[:, :, 0].mean()),
        median_static=np.median(X_stat, axis=0),
    )


def save_manifest(out_dir: str | Path, command: str, seed: Optional[int], config_blob, artifacts: dict) -> Path:
    """Record what produced the artifacts in this directory."""
    import hashlib

    blob = json.dumps(config_blob, sort_keys=True, default=str)
    manifest = {
        "command": command,
        "seed": seed,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "artifacts": {k: str(v) for k, v in artifacts.items()},
        "created": datetime.now().isoformat(timespec="seconds"),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path
