"""Static behavioral features, percentile normalization, and oversampling.

The 29-entry feature vector is 4 demographics, 4 call-timing statistics,
and 7 event statistics for each of three event views: every event
(calls plus manual marks), calls only, and unique call days (same-day
repeat calls collapsed). Features are normalized as training-set
percentiles; opaque categorical ids go through a frequency-rank encoding
first so the percentile rule applies uniformly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import AdherenceCalendar, PatientRecord, AGE_BANDS, WEIGHT_BANDS, Gender

SCHEMA_VERSION = "v1"

_DEMOGRAPHICS = ("weight_band", "age_band", "gender", "center_id")
_TIMING = ("mean_call_minute", "var_call_minute", "mean_call_hour", "var_call_hour")
_VARIANTS = ("all_events", "calls_only", "unique_calls")
_VARIANT_STATS = (
    "n_events",
    "mean_per_day",
    "max_per_day",
    "var_per_day",
    "mean_gap_days",
    "var_gap_days",
    "max_gap_days",
)

FEATURE_NAMES: tuple[str, ...] = tuple(
    list(_DEMOGRAPHICS)
    + list(_TIMING)
    + [f"{v}__{s}" for v in _VARIANTS for s in _VARIANT_STATS]
)
N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 29

CATEGORICAL_FEATURES: tuple[int, ...] = (FEATURE_NAMES.index("center_id"),)

_GENDER_CODE = {Gender.M: 0, Gender.F: 1, Gender.O: 2}


@dataclass(frozen=True)
class FeatureSchema:
    version: str = SCHEMA_VERSION
    names: tuple[str, ...] = FEATURE_NAMES
    categorical: tuple[int, ...] = CATEGORICAL_FEATURES


DEFAULT_SCHEMA = FeatureSchema()


@dataclass(frozen=True)
class CategoryCodec:
    """Stable integer codes for opaque ids (centers), shared cohort-wide."""

    centers: dict[str, int]

    @classmethod
    def from_patients(cls, patients: Iterable[PatientRecord]) -> "CategoryCodec":
        ids = sorted({p.center_id for p in patients})
        return cls(centers={c: i for i, c in enumerate(ids)})

    def center_code(self, center_id: str) -> int:
        return self.centers.get(center_id, len(self.centers))


def _day_stats(day_counts: np.ndarray, event_days: list[int], k: int) -> list[float]:
    n = int(day_counts.sum())
    stats = [
        float(n),
        float(day_counts.mean()),
        float(day_counts.max()),
        float(day_counts.var()),
    ]
    if len(event_days) >= 2:
        gaps = np.diff(np.asarray(event_days, dtype=float))
        stats += [float(gaps.mean()), float(gaps.var()), float(gaps.max())]
    else:
        stats += [float(k), float(k), float(k)]  # gap sentinel: window length
    return stats


def static_features(
    calendar: AdherenceCalendar,
    patient: PatientRecord,
    lo: int,
    hi: int,
    codec: CategoryCodec,
) -> np.ndarray:
    """Raw (pre-normalization) 29-vector over window days [lo, hi].

    Windows without any call use -1 sentinels for the four timing features
    and the window length for gap features, both outside the legal ranges.
    """
    if not (0 <= lo <= hi < calendar.n_days):
        raise ValueError(f"window [{lo}, {hi}] outside calendar of {calendar.n_days} days")
    k = hi - lo + 1

    out = np.empty(N_FEATURES, dtype=float)
    out[0] = WEIGHT_BANDS.index(patient.weight_band)
    out[1] = AGE_BANDS.index(patient.age_band)
    out[2] = _GENDER_CODE[patient.gender]
    out[3] = codec.center_code(patient.center_id)

    call_ts = [ts for d in range(lo, hi + 1) for ts in calendar.call_times[d]]
    if call_ts:
        minutes = np.array([ts.minute for ts in call_ts], dtype=float)
        hours = np.array([ts.hour for ts in call_ts], dtype=float)
        out[4:8] = [minutes.mean(), minutes.var(), hours.mean(), hours.var()]
    else:
        out[4:8] = -1.0

    n_calls = np.array(
        [len(calendar.call_times[d]) for d in range(lo, hi + 1)], dtype=float
    )
    n_manual = np.array(
        [calendar.manual_marks[d] for d in range(lo, hi + 1)], dtype=float
    )
    views = {
        "all_events": n_calls + n_manual,
        "calls_only": n_calls,
        "unique_calls": (n_calls > 0).astype(float),
    }
    pos = 8
    for name in _VARIANTS:
        counts = views[name]
        event_days = [d for d in range(k) for _ in range(int(counts[d]))]
        out[pos : pos + 7] = _day_stats(counts, event_days, k)
        pos += 7
    return out


# -- percentile scaling -------------------------------------------------------


class PercentileScaler:
    """Maps each feature to its percentile among the training values.

    transform(v) = (#train < v + 0.5 * #train == v) / n per feature, which is
    monotone with range [0, 1]. Categorical columns are first re-encoded by
    descending training frequency (ties broken by code), then percentiled
    like any numeric column; unseen categories rank past the known ones.
    """

    def __init__(
        self,
        sorted_cols: list[np.ndarray],
        cat_ranks: dict[int, dict[int, int]],
        schema: FeatureSchema = DEFAULT_SCHEMA,
    ):
        self.sorted_cols = sorted_cols
        self.cat_ranks = cat_ranks
        self.schema = schema
        self.n = len(sorted_cols[0]) if sorted_cols else 0

    def _encode(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        for j, ranks in self.cat_ranks.items():
            unseen = len(ranks)
            col = X[:, j]
            X[:, j] = [ranks.get(int(v), unseen) for v in col]
        return X

    def transform(self, X: np.ndarray) -> np.ndarray:
        single = X.ndim == 1
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.sorted_cols):
            raise ValueError(f"expected {len(self.sorted_cols)} features, got {X.shape[1]}")
        X = self._encode(X)
        out = np.empty_like(X)
        for j, col in enumerate(self.sorted_cols):
            less = np.searchsorted(col, X[:, j], side="left")
            upto = np.searchsorted(col, X[:, j], side="right")
            out[:, j] = (less + 0.5 * (upto - less)) / self.n
        return out[0] if single else out

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema.version,
            "feature_names": list(self.schema.names),
            "n_train": self.n,
            "categorical_ranks": {
                str(j): {str(k): v for k, v in ranks.items()}
                for j, ranks in self.cat_ranks.items()
            },
            "sorted_values": [col.tolist() for col in self.sorted_cols],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def from_json(cls, blob: dict) -> "PercentileScaler":
        cols = [np.asarray(c, dtype=float) for c in blob["sorted_values"]]
        ranks = {
            int(j): {int(k): int(v) for k, v in r.items()}
            for j, r in blob["categorical_ranks"].items()
        }
        return cls(cols, ranks)

    @classmethod
    def load(cls, path: str | Path) -> "PercentileScaler":
        return cls.from_json(json.loads(Path(path).read_text()))


def fit_percentiles(
    X_train: np.ndarray, schema: FeatureSchema = DEFAULT_SCHEMA
) -> PercentileScaler:
    X = np.asarray(X_train, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit needs a nonempty 2-D training matrix")
    cat_ranks: dict[int, dict[int, int]] = {}
    X = X.copy()
    for j in schema.categorical:
        codes, counts = np.unique(X[:, j].astype(int), return_counts=True)
        order = sorted(zip(codes, counts), key=lambda cc: (-cc[1], cc[0]))
        ranks = {int(code): r for r, (code, _) in enumerate(order)}
        cat_ranks[j] = ranks
        X[:, j] = [ranks[int(v)] for v in X[:, j]]
    sorted_cols = [np.sort(X[:, j]) for j in range(X.shape[1])]
    return PercentileScaler(sorted_cols, cat_ranks, schema)


# -- SMOTE ---------------------------------------------------------------------


def smote_with_origins(
    X: np.ndarray, y: np.ndarray, k_neighbors: int = 5, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Oversample the minority class to 1:1 by neighbor interpolation.

    Returns (X', y', origins) where origins[i] = (seed_row, neighbor_row)
    gives, for the i-th appended synthetic row, the indices of the two
    minority rows it interpolates between (neighbor -1 when the minority
    class has a single point and synthetics are copies). Original rows are
    passed through untouched and first.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y disagree on sample count")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) == 1:
        raise ValueError("cannot oversample with a single class present")
    minority = classes[np.argmin(counts)]
    n_min, n_maj = counts.min(), counts.max()
    n_needed = int(n_maj - n_min)
    if n_needed == 0:
        return X.copy(), y.copy(), np.empty((0, 2), dtype=int)

    min_idx = np.flatnonzero(y == minority)
    k = min(k_neighbors, n_min - 1)
    if k < k_neighbors:
        warnings.warn(
            f"minority class has {n_min} points; reducing k_neighbors to {max(k, 0)}"
        )

    rng = np.random.default_rng(seed)
    Xm = X[min_idx]
    if k >= 1:
        d2 = ((Xm[:, None, :] - Xm[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        neighbors = np.argsort(d2, axis=1)[:, :k]
    else:
        neighbors = None  # lone minority point: synthetics are copies

    synths = np.empty((n_needed, X.shape[1]), dtype=float)
    origins = np.empty((n_needed, 2), dtype=int)
    for i in range(n_needed):
        a = int(rng.integers(n_min))
        if neighbors is None:
            synths[i] = Xm[a]
            origins[i] = (min_idx[a], -1)
        else:
            b = int(neighbors[a, int(rng.integers(k))])
            lam = rng.random()
            synths[i] = Xm[a] + lam * (Xm[b] - Xm[a])
            origins[i] = (min_idx[a], min_idx[b])

    X2 = np.vstack([X, synths])
    y2 = np.concatenate([y, np.full(n_needed, minority, dtype=int)])
    return X2, y2, origins


def smote(
    X: np.ndarray, y: np.ndarray, k_neighbors: int = 5, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    X2, y2, _ = smote_with_origins(X, y, k_neighbors=k_neighbors, seed=seed)
    return X2, y2
