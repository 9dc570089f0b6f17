"""Predictors: heuristic scores, a random forest, and the LEAP network."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..featurize import PercentileScaler
from ..tasklab import TaskSample
from .heuristics import heuristic_score
from .forest import Forest, ForestConfig, forest_predict, forest_train
from .leap import (
    AdamState,
    LeapConfig,
    LeapModel,
    gradient_check,
    init_leap,
    leap_forward,
    leap_train,
)

__all__ = [
    "heuristic_score",
    "Forest",
    "ForestConfig",
    "forest_predict",
    "forest_train",
    "AdamState",
    "LeapConfig",
    "LeapModel",
    "gradient_check",
    "init_leap",
    "leap_forward",
    "leap_train",
    "sample_arrays",
]


def sample_arrays(
    samples: Sequence[TaskSample],
    scaler: Optional[PercentileScaler] = None,
    statics: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack samples into (X_seq, X_stat, y) model inputs.

    The sequence tensor carries two channels per day: the taken/missed bit
    and the lifetime missed count rescaled by the days elapsed at the
    anchor, which keeps the channel in [0, 1] regardless of how deep into
    treatment the window sits. Static features are percentile-scaled when a
    scaler is given; ``statics`` overrides the per-sample vectors (used to
    feed oversampled matrices without rebuilding samples).
    """
    n = len(samples)
    if n == 0:
        raise ValueError("no samples")
    k = samples[0].k
    X_seq = np.zeros((n, k, 2), dtype=float)
    for i, s in enumerate(samples):
        if s.k != k:
            raise ValueError("mixed sequence lengths in one batch")
        X_seq[i, :, 0] = s.call_seq
        X_seq[i, :, 1] = np.asarray(s.cum_miss_seq, dtype=float) / (s.anchor + 1)
    if statics is None:
        statics = np.stack([s.static for s in samples])
    X_stat = scaler.transform(statics) if scaler is not None else np.asarray(statics, float)
    y = np.array([s.label for s in samples], dtype=float)
    return X_seq, X_stat, y
