"""Weekly visit planning: exact matching, a smoothed solver, and training
through the decision.

A worker may visit one location per day over a 7-day week, each location at
most once. Rewards come from per-patient success coefficients: visiting
patient j's location on day t succeeds if j started the week at MEDIUM
attention and t falls on or before their first missed day of the week.
The plan polytope is a bipartite matching polytope, so the exact optimum
is integral; the smoothed solver maximizes r.x - (gamma/2)|x|^2 instead,
which makes the argmax differentiable in r and lets prediction models
train on decision quality directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import date
from typing import Optional, Sequence

import numpy as np

from .attention import MEDIUM
from .core import DoseStatus
from .featurize import CategoryCodec, N_FEATURES, PercentileScaler, static_features
from .learn.leap import (
    AdamState,
    LeapConfig,
    LeapModel,
    backward_batch,
    forward_batch,
    leap_train,
)
from .simkit import Cohort

WEEK_DAYS = 7


@dataclass(frozen=True)
class PlanInstance:
    locations: tuple[str, ...]
    r: np.ndarray  # (L, 7) rewards per location-day

    def __post_init__(self) -> None:
        if self.r.shape != (len(self.locations), WEEK_DAYS):
            raise ValueError(f"reward matrix {self.r.shape} does not match locations")
        if not np.isfinite(self.r).all():
            raise ValueError("rewards must be finite")


@dataclass(frozen=True)
class VisitPlan:
    x: np.ndarray  # (L, 7) binary
    objective: float
    assignments: tuple[tuple[int, int], ...]  # (day t, location i), t ascending

    def feasible(self) -> bool:
        return (
            set(np.unique(self.x)) <= {0, 1}
            and (self.x.sum(axis=0) <= 1).all()
            and (self.x.sum(axis=1) <= 1).all()
        )


class PlanTooLarge(ValueError):
    pass


# -- ground-truth coefficients ------------------------------------------------


def true_coefficients(
    cohort: Cohort, week_start: date, patient_ids: Sequence[str]
) -> np.ndarray:
    """Binary success coefficients c[j, t] for the week after ``week_start``.

    c[j, t-1] = 1 iff patient j is MEDIUM at the week start, misses at least
    one dose in the following 7 days, and day t is on or before the first
    such miss. Patients who never miss, or who start HIGH, keep all-zero
    rows; they stay in the instance so the plan accounts for them.
    """
    C = np.zeros((len(patient_ids), WEEK_DAYS), dtype=float)
    for j, pid in enumerate(patient_ids):
        cal = cohort.calendars[pid]
        t0 = cal.day_index(week_start)
        if t0 < 0 or t0 + WEEK_DAYS >= cal.n_days:
            raise ValueError(
                f"{pid}: week [{week_start}, +7] exceeds the observed span"
            )
        if cohort.timelines[pid].state(t0) != MEDIUM:
            continue
        first_miss = None
        for d in range(t0 + 1, t0 + WEEK_DAYS + 1):
            if cal.statuses[d] is DoseStatus.MISSED:
                first_miss = d - t0
                break
        if first_miss is None:
            continue
        C[j, :first_miss] = 1.0
    return C


def build_instance(
    locations_per_patient: Sequence[str], c: np.ndarray
) -> tuple[PlanInstance, np.ndarray]:
    """Aggregate per-patient coefficients into the location-day rewards.

    Returns the instance plus the per-patient location index vector used to
    score plans against ground truth.
    """
    if len(locations_per_patient) == 0:
        raise ValueError("empty patient group")
    c = np.asarray(c, dtype=float)
    if c.shape != (len(locations_per_patient), WEEK_DAYS):
        raise ValueError(f"coefficients {c.shape} do not match the group")
    locations = tuple(sorted(set(locations_per_patient)))
    loc_idx = np.array([locations.index(l) for l in locations_per_patient])
    r = np.zeros((len(locations), WEEK_DAYS))
    np.add.at(r, loc_idx, c)
    return PlanInstance(locations=locations, r=r), loc_idx


# -- exact solver ---------------------------------------------------------------


def _hungarian_min(cost: np.ndarray) -> np.ndarray:
    """Column assignment for a square min-cost perfect matching.

    Potentials-based shortest augmenting path; returns row index per column.
    """
    n = cost.shape[0]
    INF = float("inf")
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)  # p[j]: row matched to column j (1-based)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, INF)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            better = ~used[1:] & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            free = ~used[1:]
            j1 = int(np.argmin(np.where(free, minv[1:], INF))) + 1
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    return p[1:]


def _max_assignment_value(r: np.ndarray) -> float:
    """Optimal value of the day/location matching for rewards (L, T)."""
    L, T = r.shape
    if L == 0 or T == 0 or r.size == 0:
        return 0.0
    n = max(L, T)
    W = np.zeros((n, n))
    W[:T, :L] = r.T  # rows = days, columns = locations
    cost = W.max() - W
    assign = _hungarian_min(cost)  # row per column
    total = 0.0
    for col in range(n):
        row = assign[col] - 1
        total += W[row, col]
    return float(total)


def solve_plan(instance: PlanInstance) -> VisitPlan:
    """Exact optimal plan with deterministic lexicographic tie-breaking.

    Ties are resolved by fixing, in (day, location) order, every positive-
    reward visit that still permits the optimal objective; zero-reward
    visits are never scheduled.
    """
    r = instance.r
    L = len(instance.locations)
    best = _max_assignment_value(r)

    fixed: list[tuple[int, int]] = []
    fixed_value = 0.0
    used_locs: set[int] = set()
    used_days: set[int] = set()
    for t in range(WEEK_DAYS):
        for i in range(L):
            if i in used_locs or r[i, t] <= 0:
                continue
            rest = np.delete(
                np.delete(r, sorted(used_locs | {i}), axis=0),
                sorted(used_days | {t}),
                axis=1,
            )
            value = fixed_value + r[i, t] + _max_assignment_value(rest)
            if np.isclose(value, best, rtol=1e-9, atol=1e-9):
                fixed.append((t, i))
                fixed_value += r[i, t]
                used_locs.add(i)
                used_days.add(t)
                break

    x = np.zeros((L, WEEK_DAYS), dtype=int)
    for t, i in fixed:
        x[i, t] = 1
    objective = float((x * r).sum())
    assert np.isclose(objective, best, atol=1e-6), "tie-break lost optimality"
    return VisitPlan(x=x, objective=objective, assignments=tuple(fixed))


def brute_force_plan(instance: PlanInstance, max_locations: int = 8) -> VisitPlan:
    """Enumerate every injective partial day-to-location map. Oracle only."""
    r = instance.r
    L = len(instance.locations)
    if L > max_locations:
        raise PlanTooLarge(f"{L} locations exceeds the enumeration guard {max_locations}")

    best_value = -1.0
    best_key: Optional[tuple] = None
    best_choice: Optional[tuple] = None

    def rec(t: int, used: frozenset, value: float, choice: tuple) -> None:
        nonlocal best_value, best_key, best_choice
        if t == WEEK_DAYS:
            key = tuple(c if c is not None else np.inf for c in choice)
            if value > best_value + 1e-12 or (
                np.isclose(value, best_value) and (best_key is None or key < best_key)
            ):
                best_value, best_key, best_choice = value, key, choice
            return
        rec(t + 1, used, value, choice + (None,))
        for i in range(L):
            if i not in used and r[i, t] > 0:
                rec(t + 1, used | {i}, value + r[i, t], choice + (i,))

    rec(0, frozenset(), 0.0, ())
    assert best_choice is not None
    x = np.zeros((L, WEEK_DAYS), dtype=int)
    assignments = []
    for t, i in enumerate(best_choice):
        if i is not None:
            x[i, t] = 1
            assignments.append((t, i))
    return VisitPlan(
        x=x, objective=float((x * r).sum()), assignments=tuple(assignments)
    )


def count_feasible_plans(L: int, T: int) -> int:
    """Number of injective partial maps days -> locations (incl. empty)."""

    def rec(t: int, used: int) -> int:
        if t == T:
            return 1
        total = rec(t + 1, used)
        for i in range(L):
            if not used & (1 << i):
                total += rec(t + 1, used | (1 << i))
        return total

    return rec(0, 0)


# -- smoothed solver and its Jacobian -------------------------------------------


@dataclass
class SoftSolution:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool


def _active_rows(x: np.ndarray, tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Active-constraint matrix G (rows) and bounds h at the solution."""
    L, T = x.shape
    rows = []
    h = []
    for i in range(L):
        for t in range(T):
            if x[i, t] <= tol:
                g = np.zeros(L * T)
                g[i * T + t] = -1.0
                rows.append(g)
                h.append(0.0)
    for t in range(T):
        if x[:, t].sum() >= 1.0 - tol:
            g = np.zeros(L * T)
            g[t::T] = 1.0
            rows.append(g)
            h.append(1.0)
    for i in range(L):
        if x[i, :].sum() >= 1.0 - tol:
            g = np.zeros(L * T)
            g[i * T : (i + 1) * T] = 1.0
            rows.append(g)
            h.append(1.0)
    if not rows:
        return np.zeros((0, L * T)), np.zeros(0)
    return np.asarray(rows), np.asarray(h)


def _polytope_constraints(L: int, T: int) -> tuple[np.ndarray, np.ndarray]:
    """All inequality rows A x <= b: entry nonnegativity, then per-day
    (column) sums, then per-location (row) sums."""
    n = L * T
    A = np.zeros((n + T + L, n))
    b = np.zeros(n + T + L)
    A[:n] = -np.eye(n)
    for t in range(T):
        A[n + t, t::T] = 1.0
        b[n + t] = 1.0
    for i in range(L):
        A[n + T + i, i * T : (i + 1) * T] = 1.0
        b[n + T + i] = 1.0
    return A, b


def _project_polytope(z: np.ndarray, max_iter: int = 10000) -> tuple[np.ndarray, int, float, bool]:
    """Exact Euclidean projection of z onto the plan polytope.

    Active-set iteration: walk within the current working set's equality
    manifold toward the unconstrained optimum, add the first blocking
    constraint, and drop constraints whose multipliers go negative
    (lowest-index rule on ties for determinism). Terminates with an exact
    KKT point; plain alternating projections stall at O(1/k) when z is far
    outside, which this avoids.
    """
    L, T = z.shape
    n = L * T
    A, b = _polytope_constraints(L, T)
    zf = z.reshape(-1)
    scale = max(1.0, float(np.abs(zf).max(initial=0.0)))
    tol = 1e-9 * scale

    x = np.zeros(n)
    work = list(range(n))  # nonnegativity rows are active at the origin
    for it in range(1, max_iter + 1):
        Aw = A[work]
        nu, *_ = np.linalg.lstsq(Aw @ Aw.T, Aw @ zf - b[work], rcond=None)
        x_eq = zf - Aw.T @ nu
        p = x_eq - x
        if np.abs(p).max(initial=0.0) < tol:
            if len(work) == 0 or nu.min() >= -tol:
                residual = float(np.maximum(A @ x - b, 0.0).max(initial=0.0))
                return x.reshape(L, T), it, residual, True
            neg = [k for k, v in enumerate(nu) if v < -tol]
            work.pop(min(neg, key=lambda k: work[k]))
            continue
        Ap = A @ p
        slack = np.maximum(b - A @ x, 0.0)
        p_scale = float(np.abs(p).max())
        alpha, who = 1.0, None
        for i in range(len(b)):
            if i in work or Ap[i] <= 1e-12 * p_scale:
                continue
            ratio = slack[i] / Ap[i]
            if ratio < alpha - 1e-12 or (
                who is not None and abs(ratio - alpha) <= 1e-12 and i < who
            ):
                alpha, who = max(ratio, 0.0), i
        x = x + alpha * p
        if who is not None:
            work.append(who)
    residual = float(np.maximum(A @ x - b, 0.0).max(initial=0.0))
    return x.reshape(L, T), max_iter, residual, False


def soft_solve(
    instance: PlanInstance,
    gamma: float,
    tol: float = 1e-8,
    max_iter: int = 10000,
) -> SoftSolution:
    """Maximize r.x - (gamma/2)|x|^2 over the plan polytope.

    The maximizer is the Euclidean projection of r/gamma onto the polytope,
    computed exactly by the active-set iteration; ``tol`` bounds the
    accepted feasibility residual and ``max_iter`` caps the iteration.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x, it, residual, converged = _project_polytope(instance.r / gamma, max_iter)
    if not converged or residual > tol:
        warnings.warn(f"smoothed solve stopped at residual {residual:.2e}")
        converged = False
    return SoftSolution(x=np.clip(x, 0.0, None), iterations=it, residual=residual, converged=converged)


def soft_grad(
    instance: PlanInstance, gamma: float, solution: Optional[SoftSolution] = None
) -> np.ndarray:
    """Jacobian d x*/d r of the smoothed solve, shape (L*T, L*T).

    Uses implicit differentiation of the active-set KKT system: the map is
    locally x*(r) = (1/gamma) * P_null(G_A) r. Falls back to central finite
    differences with a warning if the projector cannot be formed.
    """
    sol = solution or soft_solve(instance, gamma)
    L, T = instance.r.shape
    n = L * T
    G, _ = _active_rows(sol.x)
    try:
        if G.shape[0] == 0:
            proj = np.eye(n)
        else:
            proj = np.eye(n) - G.T @ np.linalg.pinv(G @ G.T) @ G
        return proj / gamma
    except np.linalg.LinAlgError:
        warnings.warn("singular active-set system; using finite differences")
        return finite_diff_soft_grad(instance, gamma)


def strictly_complementary(
    instance: PlanInstance,
    gamma: float,
    dual_margin: float = 1e-3,
    slack_margin: float = 1e-3,
) -> bool:
    """Whether the smoothed solution is safely away from active-set ties.

    The solution map is differentiable only where every active constraint
    has a clearly positive multiplier and every inactive one clear slack;
    near-degenerate instances should be perturbed before differentiating
    (finite differences would straddle a kink there).
    """
    sol = soft_solve(instance, gamma)
    x = sol.x
    L, T = x.shape
    G, h = _active_rows(x)
    r_scale = max(1.0, float(instance.r.max(initial=0.0)))
    if G.shape[0]:
        target = (instance.r / gamma).reshape(-1)
        lam, *_ = np.linalg.lstsq(G.T, target - x.reshape(-1), rcond=None)
        residual = G.T @ lam - (target - x.reshape(-1))
        if np.abs(residual).max(initial=0.0) > 1e-7 * r_scale:
            return False
        if lam.min(initial=np.inf) < dual_margin:
            return False
    A, b = _polytope_constraints(L, T)
    slack = b - A @ x.reshape(-1)
    active_mask = np.zeros(len(b), dtype=bool)
    for row in G:
        matches = np.all(np.isclose(A, row), axis=1)
        active_mask |= matches
    inactive_slack = slack[~active_mask]
    return bool(inactive_slack.min(initial=np.inf) >= slack_margin)


def finite_diff_soft_grad(
    instance: PlanInstance, gamma: float, eps: float = 1e-5
) -> np.ndarray:
    """Central finite-difference Jacobian of the smoothed solve (oracle)."""
    L, T = instance.r.shape
    n = L * T
    J = np.zeros((n, n))
    for b in range(n):
        i, t = divmod(b, T)
        r_up = instance.r.copy()
        r_up[i, t] += eps
        r_dn = instance.r.copy()
        r_dn[i, t] -= eps
        x_up = soft_solve(PlanInstance(instance.locations, r_up), gamma).x
        x_dn = soft_solve(PlanInstance(instance.locations, r_dn), gamma).x
        J[:, b] = (x_up - x_dn).reshape(-1) / (2 * eps)
    return J


# -- plan scoring ---------------------------------------------------------------


def evaluate_plan(plan: VisitPlan, c_true: np.ndarray, loc_idx: np.ndarray) -> int:
    """Successful interventions: patients whose location is visited on some
    day with a true success coefficient, each counted at most once."""
    c_true = np.asarray(c_true)
    if c_true.shape[1] != WEEK_DAYS or len(c_true) != len(loc_idx):
        raise ValueError("coefficient matrix does not match the group")
    visited = plan.x[loc_idx, :]  # (J, 7)
    return int(((visited * c_true).max(axis=1) > 0).sum())


def lw_misses_coefficients(X_seq: np.ndarray, tau: int = 1) -> np.ndarray:
    """Baseline predictor: all-ones rows for patients with at least ``tau``
    missed doses in the input week, all-zero rows otherwise."""
    misses = (X_seq[:, :, 0] == 0).sum(axis=1)
    return np.where(misses[:, None] >= tau, 1.0, 0.0) * np.ones((1, WEEK_DAYS))


# -- decision-focused training ---------------------------------------------------


@dataclass
class WeekInstance:
    """Inputs and ground truth for one (patient group, week) planning task."""

    patient_ids: tuple[str, ...]
    week_start: date
    X_seq: np.ndarray  # (J, 7, 2)
    X_stat: np.ndarray  # (J, n_static) already scaled
    c_true: np.ndarray  # (J, 7)
    loc_idx: np.ndarray  # (J,)
    locations: tuple[str, ...]

    def instance_from(self, c_hat: np.ndarray) -> PlanInstance:
        r = np.zeros((len(self.locations), WEEK_DAYS))
        np.add.at(r, self.loc_idx, c_hat)
        return PlanInstance(locations=self.locations, r=r)

    @property
    def true_instance(self) -> PlanInstance:
        return self.instance_from(self.c_true)


def week_instance(
    cohort: Cohort,
    week_start: date,
    patient_ids: Sequence[str],
    codec: CategoryCodec,
    scaler: Optional[PercentileScaler] = None,
) -> WeekInstance:
    """Build one planning instance anchored at ``week_start``.

    Model inputs mirror the risk task: the 7 days ending at the week start
    feed the sequences and static features; the label week is the 7 days
    after it.
    """
    J = len(patient_ids)
    X_seq = np.zeros((J, WEEK_DAYS, 2))
    stat_raw = np.zeros((J, N_FEATURES))
    locations_per_patient = []
    for j, pid in enumerate(patient_ids):
        cal = cohort.calendars[pid]
        t0 = cal.day_index(week_start)
        if t0 < WEEK_DAYS - 1 or t0 + WEEK_DAYS >= cal.n_days:
            raise ValueError(f"{pid}: week at {week_start} lacks input or label days")
        lo, hi = t0 - WEEK_DAYS + 1, t0
        bits = [1 if cal.statuses[d].taken else 0 for d in range(lo, hi + 1)]
        cum = np.cumsum([s is DoseStatus.MISSED for s in cal.statuses])
        X_seq[j, :, 0] = bits
        X_seq[j, :, 1] = cum[lo : hi + 1] / (t0 + 1)
        patient = cohort.patient(pid)
        stat_raw[j] = static_features(cal, patient, lo, hi, codec)
        locations_per_patient.append(patient.tb_unit_id)
    c_true = true_coefficients(cohort, week_start, patient_ids)
    _, loc_idx = build_instance(locations_per_patient, c_true)
    locations = tuple(sorted(set(locations_per_patient)))
    X_stat = scaler.transform(stat_raw) if scaler is not None else stat_raw
    return WeekInstance(
        patient_ids=tuple(patient_ids),
        week_start=week_start,
        X_seq=X_seq,
        X_stat=X_stat,
        c_true=c_true,
        loc_idx=loc_idx,
        locations=locations,
    )


def predict_coefficients(model: LeapModel, inst: WeekInstance) -> np.ndarray:
    probs, _ = forward_batch(model, inst.X_seq, inst.X_stat)
    return probs


def two_stage_train(
    config: LeapConfig, instances: Sequence[WeekInstance], balanced: bool = True
) -> tuple[LeapModel, list[float]]:
    """Cross-entropy training of the per-patient-day success predictor.

    ``balanced`` applies the same class-balancing step as the other task
    pipelines: each day-column's positives are weighted to parity with its
    negatives (the multi-output equivalent of oversampling the minority,
    where row interpolation is not defined).
    """
    X_seq = np.concatenate([w.X_seq for w in instances])
    X_stat = np.concatenate([w.X_stat for w in instances])
    y = np.concatenate([w.c_true for w in instances])
    weights = None
    if balanced:
        pos = y.mean(axis=0)
        pos = np.clip(pos, 1e-6, 1 - 1e-6)
        weights = (1.0 - pos) / pos  # per-day positive weight to 1:1 parity
    return leap_train(
        config, X_seq, X_stat, y, out_dim=WEEK_DAYS, positive_weights=weights
    )


def decision_loss(model: LeapModel, inst: WeekInstance, gamma: float) -> float:
    c_hat = predict_coefficients(model, inst)
    soft = soft_solve(inst.instance_from(c_hat), gamma)
    r_true = inst.true_instance.r
    return float(-(soft.x * r_true).sum())


def dfl_train(
    model: LeapModel,
    instances: Sequence[WeekInstance],
    gamma: float = 0.1,
    epochs: int = 15,
    lr: float = 1e-3,
    seed: int = 0,
) -> tuple[LeapModel, list[float]]:
    """Train the predictor through the smoothed planner.

    Per instance the loss is the negative true reward collected by the
    smoothed plan for the predicted rewards; gradients flow through the
    solver Jacobian and the location aggregation into the network.
    Returns the model and the per-epoch mean decision loss.
    """
    rng = np.random.default_rng(seed)
    opt = AdamState(model.params, lr=lr)
    trace: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(len(instances))
        total = 0.0
        for idx in order:
            inst = instances[idx]
            probs, cache = forward_batch(model, inst.X_seq, inst.X_stat, want_cache=True)
            plan_inst = inst.instance_from(probs)
            soft = soft_solve(plan_inst, gamma)
            r_true = inst.true_instance.r
            total += -(soft.x * r_true).sum()

            jac = soft_grad(plan_inst, gamma, soft)  # (LT, LT)
            d_r = -(jac.T @ r_true.reshape(-1)).reshape(r_true.shape)
            d_c = d_r[inst.loc_idx, :]  # (J, 7)
            d_logits = d_c * probs * (1.0 - probs)
            grads = backward_batch(model, cache, d_logits)
            opt.step(model.params, grads)
        trace.append(total / len(instances))
    return model, trace
