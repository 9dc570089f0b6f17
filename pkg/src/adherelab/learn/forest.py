"""Bagged CART forest with Gini splits, built directly on numpy.

Trees split on midpoints of sorted feature values, sampling sqrt(d)
features per split; prediction averages the leaf positive fractions
across trees. Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: Optional[int] = 5
    seed: int = 0
    min_split: int = 2

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")


# presets quoted per task: (n_trees, max_depth)
RISK_FOREST = ForestConfig(n_trees=100, max_depth=5)
OUTCOME_FOREST = ForestConfig(n_trees=150, max_depth=None)
LCFO_0DAY_FOREST = ForestConfig(n_trees=300, max_depth=10)
LCFO_FOREST = ForestConfig(n_trees=200, max_depth=10)


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _node_to_json(node: _Node) -> dict:
    if node.is_leaf:
        return {"value": node.value}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "value": node.value,
        "left": _node_to_json(node.left),
        "right": _node_to_json(node.right),
    }


def _node_from_json(blob: dict) -> _Node:
    node = _Node(value=blob["value"])
    if "feature" in blob:
        node.feature = blob["feature"]
        node.threshold = blob["threshold"]
        node.left = _node_from_json(blob["left"])
        node.right = _node_from_json(blob["right"])
    return node


@dataclass
class Forest:
    config: ForestConfig
    trees: list[_Node]
    constant: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "kind": "forest",
            "schema_version": "v1",
            "config": {
                "n_trees": self.config.n_trees,
                "max_depth": self.config.max_depth,
                "seed": self.config.seed,
                "min_split": self.config.min_split,
            },
            "constant": self.constant,
            "trees": [_node_to_json(t) for t in self.trees],
        }

    @classmethod
    def from_json(cls, blob: dict) -> "Forest":
        return cls(
            config=ForestConfig(**blob["config"]),
            trees=[_node_from_json(t) for t in blob["trees"]],
            constant=blob["constant"],
        )


def _best_split(
    X: np.ndarray, y: np.ndarray, features: np.ndarray
) -> Optional[tuple[int, float, float]]:
    """Best (feature, threshold, impurity) over the candidate features."""
    n = len(y)
    total_pos = y.sum()
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        cum_pos = np.cumsum(ys)
        # split after position i puts i+1 samples left
        nl = np.arange(1, n)
        boundary = xs[1:] != xs[:-1]
        if not boundary.any():
            continue
        pl = cum_pos[:-1] / nl
        nr = n - nl
        pr = (total_pos - cum_pos[:-1]) / nr
        gini = nl * 2 * pl * (1 - pl) + nr * 2 * pr * (1 - pr)
        gini = np.where(boundary, gini, np.inf)
        i = int(np.argmin(gini))
        if best is None or gini[i] < best[2]:
            best = (int(j), float((xs[i] + xs[i + 1]) / 2), float(gini[i]))
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    config: ForestConfig,
    n_candidates: int,
    rng: np.random.Generator,
) -> _Node:
    node = _Node(value=float(y.mean()))
    if (
        len(y) < config.min_split
        or y.min() == y.max()
        or (config.max_depth is not None and depth >= config.max_depth)
    ):
        return node
    features = rng.choice(X.shape[1], size=n_candidates, replace=False)
    split = _best_split(X, y, features)
    if split is None:
        return node
    j, thr, _ = split
    mask = X[:, j] <= thr
    node.feature = j
    node.threshold = thr
    node.left = _grow(X[mask], y[mask], depth + 1, config, n_candidates, rng)
    node.right = _grow(X[~mask], y[~mask], depth + 1, config, n_candidates, rng)
    return node


def forest_train(config: ForestConfig, X: np.ndarray, y: np.ndarray) -> Forest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one label per row")
    if y.min() == y.max():
        warnings.warn("single-class training labels: fitting a constant model")
        return Forest(config=config, trees=[], constant=float(y[0]))
    rng = np.random.default_rng(config.seed)
    n = len(y)
    n_candidates = max(1, int(math.isqrt(X.shape[1])))
    trees = []
    for _ in range(config.n_trees):
        idx = rng.integers(n, size=n)
        trees.append(_grow(X[idx], y[idx], 0, config, n_candidates, rng))
    return Forest(config=config, trees=trees)


def _predict_tree(node: _Node, x: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.value


def forest_predict(model: Forest, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.constant is not None:
        return np.full(len(X), model.constant)
    out = np.zeros(len(X))
    for i, x in enumerate(X):
        out[i] = sum(_predict_tree(t, x) for t in model.trees) / len(model.trees)
    return out
