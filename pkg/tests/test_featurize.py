import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adherelab.featurize import (
    CategoryCodec,
    FEATURE_NAMES,
    N_FEATURES,
    PercentileScaler,
    fit_percentiles,
    smote,
    smote_with_origins,
    static_features,
)

from test_core import call, make_patient, manual, statuses_from
from adherelab.core import build_calendar


CODEC = CategoryCodec(centers={"C001": 0, "C002": 1})


def test_schema_has_29_unique_names():
    assert N_FEATURES == 29
    assert len(set(FEATURE_NAMES)) == 29


def test_timing_means():
    cal = build_calendar(make_patient(n_days=7), [call(0, 9, 0), call(1, 9, 30)])
    v = static_features(cal, make_patient(n_days=7), 0, 6, CODEC)
    names = dict(zip(FEATURE_NAMES, v))
    assert names["mean_call_minute"] == 15.0
    assert names["mean_call_hour"] == 9.0
    assert names["var_call_hour"] == 0.0


def test_zero_call_sentinels():
    cal = statuses_from("XXXXXXX")
    v = static_features(cal, make_patient(n_days=7), 0, 6, CODEC)
    names = dict(zip(FEATURE_NAMES, v))
    assert names["calls_only__n_events"] == 0.0
    assert names["mean_call_minute"] == -1.0
    assert names["var_call_hour"] == -1.0
    for variant in ("all_events", "calls_only", "unique_calls"):
        assert names[f"{variant}__mean_gap_days"] == 7.0
        assert names[f"{variant}__max_gap_days"] == 7.0


def test_hand_computed_fixture():
    # window of 7 days: calls on day 1 (09:00) and day 3 (09:30), a
    # double-call day 4 (10:00, 10:05), manual on day 6
    patient = make_patient(n_days=7)
    events = [
        call(1, 9, 0),
        call(3, 9, 30),
        call(4, 10, 0),
        call(4, 10, 5),
        manual(6),
    ]
    cal = build_calendar(patient, events)
    v = dict(zip(FEATURE_NAMES, static_features(cal, patient, 0, 6, CODEC)))

    # timing over the 4 calls: minutes 0, 30, 0, 5; hours 9, 9, 10, 10
    assert v["mean_call_minute"] == pytest.approx(35 / 4)
    assert v["var_call_minute"] == pytest.approx(np.var([0, 30, 0, 5]))
    assert v["mean_call_hour"] == pytest.approx(9.5)
    assert v["var_call_hour"] == pytest.approx(0.25)

    # all events: day counts [0,1,0,1,2,0,1] -> 5 events, gaps 2,1,0,2
    assert v["all_events__n_events"] == 5.0
    assert v["all_events__mean_per_day"] == pytest.approx(5 / 7)
    assert v["all_events__max_per_day"] == 2.0
    assert v["all_events__var_per_day"] == pytest.approx(np.var([0, 1, 0, 1, 2, 0, 1]))
    assert v["all_events__mean_gap_days"] == pytest.approx(np.mean([2, 1, 0, 2]))
    assert v["all_events__var_gap_days"] == pytest.approx(np.var([2, 1, 0, 2]))
    assert v["all_events__max_gap_days"] == 2.0

    # calls only: counts [0,1,0,1,2,0,0] -> 4 events, gaps 2,1,0
    assert v["calls_only__n_events"] == 4.0
    assert v["calls_only__max_per_day"] == 2.0
    assert v["calls_only__mean_gap_days"] == pytest.approx(1.0)
    assert v["calls_only__max_gap_days"] == 2.0

    # unique call days: {1,3,4} -> 3 events, gaps 2,1
    assert v["unique_calls__n_events"] == 3.0
    assert v["unique_calls__max_per_day"] == 1.0
    assert v["unique_calls__mean_gap_days"] == pytest.approx(1.5)
    assert v["unique_calls__var_gap_days"] == pytest.approx(0.25)

    # demographics: F -> 1, bands per fixture, unseen center code
    assert v["gender"] == 1.0
    assert v["weight_band"] == 2.0
    assert v["age_band"] == 2.0
    assert v["center_id"] == 0.0


def test_features_invariant_to_event_order():
    patient = make_patient(n_days=7)
    events = [call(1, 9, 0), call(3, 9, 30), manual(5)]
    a = static_features(build_calendar(patient, events), patient, 0, 6, CODEC)
    b = static_features(
        build_calendar(patient, list(reversed(events))), patient, 0, 6, CODEC
    )
    assert np.array_equal(a, b)


def test_percentile_rule_examples():
    scaler = PercentileScaler([np.array([10.0, 20.0, 30.0])], {})
    assert scaler.transform(np.array([20.0]))[0] == pytest.approx(0.5)
    assert scaler.transform(np.array([5.0]))[0] == 0.0
    assert scaler.transform(np.array([99.0]))[0] == 1.0


def test_fit_transform_range_and_training_values():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, N_FEATURES))
    X[:, 3] = rng.integers(0, 4, size=50)  # center codes
    scaler = fit_percentiles(X)
    T = scaler.transform(X)
    assert T.min() >= 0.0 and T.max() <= 1.0


@given(
    train=st.lists(st.floats(-1e4, 1e4), min_size=2, max_size=40),
    v1=st.floats(-1e4, 1e4),
    v2=st.floats(-1e4, 1e4),
)
@settings(max_examples=300, deadline=None)
def test_percentile_transform_monotone(train, v1, v2):
    col = np.sort(np.asarray(train))
    scaler = PercentileScaler([col], {})
    lo, hi = sorted([v1, v2])
    t_lo = scaler.transform(np.array([lo]))[0]
    t_hi = scaler.transform(np.array([hi]))[0]
    assert t_lo <= t_hi
    assert 0.0 <= t_lo <= 1.0


def test_categorical_frequency_rank():
    X = np.zeros((6, N_FEATURES))
    X[:, 3] = [5, 5, 5, 2, 2, 9]  # codes with frequencies 3, 2, 1
    scaler = fit_percentiles(X)
    ranks = scaler.cat_ranks[3]
    assert ranks[5] == 0 and ranks[2] == 1 and ranks[9] == 2
    # unseen code percentiles beyond all training mass
    t = scaler.transform(np.tile(X[0], (1, 1)))
    unseen = X[0].copy()
    unseen[3] = 777
    assert scaler.transform(unseen)[3] == 1.0
    del t


def test_smote_balances_and_keeps_originals():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 4))
    y = np.array([1] * 6 + [0] * 24)
    X2, y2, origins = smote_with_origins(X, y, seed=3)
    assert (y2 == 1).sum() == (y2 == 0).sum() == 24
    assert np.array_equal(X2[:30], X)
    assert np.array_equal(y2[:30], y)
    assert len(origins) == 18
    assert all(y[o] == 1 for o in origins[:, 0])


def test_smote_segment_interpolation():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 0.0], [5.0, 1.0], [6.0, 0.0], [6.0, 1.0]])
    y = np.array([1, 1, 0, 0, 0, 0])
    with pytest.warns(UserWarning):
        X2, y2 = smote(X, y, k_neighbors=5, seed=0)
    synth = X2[6:]
    assert np.allclose(synth[:, 0], synth[:, 1])  # on the segment x=y
    assert (synth >= 0).all() and (synth <= 1).all()


def test_smote_zero_minority_errors():
    with pytest.raises(ValueError):
        smote(np.zeros((4, 2)), np.zeros(4, dtype=int))


def test_smote_bounding_box_property():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 5))
    y = (rng.random(200) < 0.25).astype(int)
    X2, y2, origins = smote_with_origins(X, y, seed=9)
    n_orig = len(X)
    for row, (a, b) in zip(X2[n_orig:], origins):
        lo = np.minimum(X[a], X[b])
        hi = np.maximum(X[a], X[b])
        assert (row >= lo - 1e-9).all() and (row <= hi + 1e-9).all()
