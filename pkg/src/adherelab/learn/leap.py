"""LEAP: an LSTM-plus-statics risk network, trained from scratch.

A single-layer LSTM reads the two-channel day sequence (taken bit, scaled
lifetime miss count); its final hidden state is concatenated with a dense
embedding of the static features, passed through a small rectified layer,
and squashed to per-output probabilities. Forward, backward-through-time,
and the adaptive-moment optimizer are all implemented here in double
precision so training is exactly reproducible and the gradients can be
audited against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

PARAM_KEYS = ("W_x", "W_h", "b", "W_s", "b_s", "W_p", "b_p", "W_o", "b_o")


@dataclass(frozen=True)
class LeapConfig:
    lstm_hidden: int = 64
    dense_in_units: int = 100
    penult_units: int = 16
    batch: int = 128
    epochs: int = 20
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.lstm_hidden, self.dense_in_units, self.penult_units) < 1:
            raise ValueError("layer sizes must be positive")
        if self.batch < 1 or self.epochs < 0:
            raise ValueError("batch must be >= 1 and epochs >= 0")


# layer sizes quoted per task: (lstm_hidden, dense_in_units, penult_units)
RISK_LEAP = LeapConfig(lstm_hidden=64, dense_in_units=100, penult_units=16)
OUTCOME_LEAP = LeapConfig(lstm_hidden=64, dense_in_units=48, penult_units=4)
LCFO_LEAP = LeapConfig(lstm_hidden=200, dense_in_units=1000, penult_units=16)


@dataclass
class LeapModel:
    config: LeapConfig
    n_static: int
    out_dim: int
    params: dict[str, np.ndarray]

    def save(self, path: str | Path, scaler_ref: Optional[str] = None) -> None:
        blob = {
            "kind": "leap",
            "schema_version": "v1",
            "config": self.config.__dict__,
            "n_static": self.n_static,
            "out_dim": self.out_dim,
            "scaler_ref": scaler_ref,
            "weights": {k: v.tolist() for k, v in self.params.items()},
        }
        Path(path).write_text(json.dumps(blob))

    @classmethod
    def load(cls, path: str | Path) -> "LeapModel":
        blob = json.loads(Path(path).read_text())
        return cls(
            config=LeapConfig(**blob["config"]),
            n_static=blob["n_static"],
            out_dim=blob["out_dim"],
            params={k: np.asarray(v, dtype=float) for k, v in blob["weights"].items()},
        )


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    limit = np.sqrt(6.0 / sum(shape))
    return rng.uniform(-limit, limit, size=shape)


def init_leap(config: LeapConfig, n_static: int, out_dim: int = 1) -> LeapModel:
    rng = np.random.default_rng(config.seed)
    h, ds, p = config.lstm_hidden, config.dense_in_units, config.penult_units
    params = {
        "W_x": _glorot(rng, (2, 4 * h)),
        "W_h": _glorot(rng, (h, 4 * h)),
        "b": np.zeros(4 * h),
        "W_s": _glorot(rng, (n_static, ds)),
        "b_s": np.zeros(ds),
        "W_p": _glorot(rng, (h + ds, p)),
        "b_p": np.zeros(p),
        "W_o": _glorot(rng, (p, out_dim)),
        "b_o": np.zeros(out_dim),
    }
    params["b"][h : 2 * h] = 1.0  # forget-gate bias, stabilizes early training
    return LeapModel(config=config, n_static=n_static, out_dim=out_dim, params=params)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def forward_batch(
    model: LeapModel, X_seq: np.ndarray, X_stat: np.ndarray, want_cache: bool = False
):
    """Probabilities (B, out_dim) for a batch, optionally with the cache
    needed for the backward pass."""
    P = model.params
    h_units = model.config.lstm_hidden
    B, T, C = X_seq.shape
    if C != 2 or X_stat.shape != (B, model.n_static):
        raise ValueError(
            f"shape mismatch: X_seq {X_seq.shape}, X_stat {X_stat.shape}, "
            f"expected (B, T, 2) and (B, {model.n_static})"
        )
    h = np.zeros((B, h_units))
    c = np.zeros((B, h_units))
    steps = []
    for t in range(T):
        x_t = X_seq[:, t, :]
        z = x_t @ P["W_x"] + h @ P["W_h"] + P["b"]
        i = _sigmoid(z[:, :h_units])
        f = _sigmoid(z[:, h_units : 2 * h_units])
        g = np.tanh(z[:, 2 * h_units : 3 * h_units])
        o = _sigmoid(z[:, 3 * h_units :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        if want_cache:
            steps.append((x_t, h, c, i, f, g, o, tanh_c))
        h, c = h_new, c_new

    a_s = X_stat @ P["W_s"] + P["b_s"]
    z_s = np.maximum(a_s, 0.0)
    u = np.concatenate([h, z_s], axis=1)
    a_p = u @ P["W_p"] + P["b_p"]
    z_p = np.maximum(a_p, 0.0)
    logits = z_p @ P["W_o"] + P["b_o"]
    probs = _sigmoid(logits)
    if not want_cache:
        return probs, None
    cache = {
        "steps": steps,
        "X_stat": X_stat,
        "a_s": a_s,
        "z_s": z_s,
        "u": u,
        "a_p": a_p,
        "z_p": z_p,
        "h_T": h,
    }
    return probs, cache


def backward_batch(model: LeapModel, cache: dict, d_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, given dL/dlogits."""
    P = model.params
    h_units = model.config.lstm_hidden
    grads = {k: np.zeros_like(v) for k, v in P.items()}

    grads["W_o"] = cache["z_p"].T @ d_logits
    grads["b_o"] = d_logits.sum(axis=0)
    d_zp = d_logits @ P["W_o"].T
    d_ap = d_zp * (cache["a_p"] > 0)
    grads["W_p"] = cache["u"].T @ d_ap
    grads["b_p"] = d_ap.sum(axis=0)
    d_u = d_ap @ P["W_p"].T

    d_zs = d_u[:, h_units:]
    d_as = d_zs * (cache["a_s"] > 0)
    grads["W_s"] = cache["X_stat"].T @ d_as
    grads["b_s"] = d_as.sum(axis=0)

    d_h = d_u[:, :h_units]
    d_c = np.zeros_like(d_h)
    for x_t, h_prev, c_prev, i, f, g, o, tanh_c in reversed(cache["steps"]):
        d_o = d_h * tanh_c
        d_c = d_c + d_h * o * (1.0 - tanh_c**2)
        d_i = d_c * g
        d_g = d_c * i
        d_f = d_c * c_prev
        d_z = np.concatenate(
            [
                d_i * i * (1 - i),
                d_f * f * (1 - f),
                d_g * (1 - g**2),
                d_o * o * (1 - o),
            ],
            axis=1,
        )
        grads["W_x"] += x_t.T @ d_z
        grads["W_h"] += h_prev.T @ d_z
        grads["b"] += d_z.sum(axis=0)
        d_h = d_z @ P["W_h"].T
        d_c = d_c * f
    return grads


def leap_forward(model: LeapModel, call_seq, cum_seq, static):
    """Probability for one sample; the cumulative channel is expected
    already rescaled into [0, 1]."""
    x_seq = np.stack(
        [np.asarray(call_seq, dtype=float), np.asarray(cum_seq, dtype=float)], axis=1
    )[None, :, :]
    x_stat = np.asarray(static, dtype=float)[None, :]
    probs, _ = forward_batch(model, x_seq, x_stat)
    return float(probs[0, 0]) if model.out_dim == 1 else probs[0]


def bce_loss(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


class AdamState:
    """Adaptive-moment optimizer over a parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-3):
        self.lr = lr
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k in params:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)


def leap_train(
    config: LeapConfig,
    X_seq: np.ndarray,
    X_stat: np.ndarray,
    y: np.ndarray,
    out_dim: int = 1,
    model: Optional[LeapModel] = None,
    positive_weights: Optional[np.ndarray] = None,
) -> tuple[LeapModel, list[float]]:
    """Mini-batch cross-entropy training; returns the model and the
    per-epoch mean loss trace.

    ``positive_weights`` (one per output) reweights positive labels in the
    loss, the in-place equivalent of oversampling a minority class.
    """
    X_seq = np.asarray(X_seq, dtype=float)
    X_stat = np.asarray(X_stat, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n = len(y)
    if model is None:
        model = init_leap(config, n_static=X_stat.shape[1], out_dim=out_dim)
    opt = AdamState(model.params, lr=config.lr)
    rng = np.random.default_rng(config.seed + 1)
    w_pos = None if positive_weights is None else np.asarray(positive_weights, dtype=float)
    losses: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch):
            idx = order[start : start + config.batch]
            probs, cache = forward_batch(model, X_seq[idx], X_stat[idx], want_cache=True)
            yb = y[idx]
            if w_pos is None:
                loss = bce_loss(probs, yb)
                d_logits = (probs - yb) / probs.size
            else:
                w = np.where(yb == 1.0, w_pos[None, :], 1.0)
                p = np.clip(probs, 1e-12, 1.0 - 1e-12)
                loss = float(
                    -np.sum(w * (yb * np.log(p) + (1 - yb) * np.log(1 - p))) / probs.size
                )
                d_logits = w * (probs - yb) / probs.size
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at step {opt.t}: check inputs and learning rate"
                )
            grads = backward_batch(model, cache, d_logits)
            opt.step(model.params, grads)
            epoch_loss += loss * len(idx)
        losses.append(epoch_loss / n)
    return model, losses


def gradient_check(
    model: LeapModel,
    x_seq: np.ndarray,
    x_stat: np.ndarray,
    y: np.ndarray,
    eps: float = 1e-5,
) -> float:
    """Max relative error between analytic and central finite-difference
    gradients of the cross-entropy loss, over every weight."""
    x_seq = np.atleast_3d(np.asarray(x_seq, dtype=float))
    x_stat = np.atleast_2d(np.asarray(x_stat, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))

    probs, cache = forward_batch(model, x_seq, x_stat, want_cache=True)
    d_logits = (probs - y) / probs.size
    grads = backward_batch(model, cache, d_logits)

    def loss_now() -> float:
        p, _ = forward_batch(model, x_seq, x_stat)
        return bce_loss(p, y)

    worst = 0.0
    for key in PARAM_KEYS:
        w = model.params[key]
        flat = w.reshape(-1)
        gflat = grads[key].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = loss_now()
            flat[idx] = orig - eps
            down = loss_now()
            flat[idx] = orig
            numeric = (up - down) / (2 * eps)
            denom = max(abs(numeric), abs(gflat[idx]), 1e-4)
            worst = max(worst, abs(numeric - gflat[idx]) / denom)
    return worst
