import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamcast.evaluation.events import (
    EventScore,
    extract_events,
    match_events,
    prf1,
    score_events,
)
from helpers import brute_force_max_matching, crossings_by_loop

event_days = st.lists(st.integers(0, 40), max_size=12, unique=True)


def test_single_crossing():
    ev = extract_events([1, 5, 5, 1], 3)
    assert list(ev.positions) == [1]
    assert not ev.starts_above


def test_series_starting_above_counts_first_day():
    ev = extract_events([4, 5, 6, 7], 3)
    assert list(ev.positions) == [0]
    assert ev.starts_above


def test_crossing_at_exact_threshold_counts():
    assert list(extract_events([1, 3, 1, 3], 3).positions) == [1, 3]


def test_missing_days_count_as_below_and_are_reported():
    ev = extract_events([1, 5, np.nan, 5, 1], 3)
    assert list(ev.positions) == [1, 3]
    assert ev.n_missing == 1


def test_dates_follow_positions():
    s = pd.Series([0, 4, 0, 4], index=pd.date_range("2001-03-01", periods=4))
    ev = extract_events(s, 2)
    assert list(ev.dates) == [pd.Timestamp("2001-03-02"), pd.Timestamp("2001-03-04")]


@settings(max_examples=200)
@given(st.lists(st.one_of(st.floats(0, 10), st.just(float("nan"))), max_size=60), st.floats(0, 10))
def test_extract_matches_loop_scan(flow, thr):
    ev = extract_events(np.array(flow, dtype=float), thr)
    assert list(ev.positions) == crossings_by_loop(flow, thr)
    assert np.all(np.diff(ev.positions) > 0)


def test_match_examples():
    assert match_events([10], [11]) == (1, 0, 0)
    assert match_events([10], [13]) == (0, 1, 1)
    assert match_events([], []) == (0, 0, 0)
    assert match_events([10, 11], [12]) == (1, 1, 0)


def test_greedy_nearest_would_lose_a_pair():
    # nearest-first would pair 12 with 12 and strand 10; maximum matching finds two pairs
    assert match_events([10, 12], [12, 14]) == (2, 0, 0)
    assert match_events([12, 14], [10, 12]) == (2, 0, 0)


def test_accepts_dates():
    p = np.array(["2000-01-01", "2000-03-01"], dtype="datetime64[D]")
    o = np.array(["2000-01-03", "2000-03-04"], dtype="datetime64[D]")
    assert match_events(p, o) == (1, 1, 1)


@settings(max_examples=300)
@given(pred=event_days, obs=event_days, window=st.integers(0, 4))
def test_match_equals_exhaustive_maximum(pred, obs, window):
    tp, fp, fn = match_events(pred, obs, window)
    assert tp == brute_force_max_matching(pred, obs, window)
    assert tp + fp == len(pred) and tp + fn == len(obs)


@given(pred=event_days, obs=event_days)
def test_match_symmetric(pred, obs):
    assert match_events(pred, obs)[0] == match_events(obs, pred)[0]


def test_prf1_examples():
    assert prf1(1, 1, 1) == (0.5, 0.5, 0.5)
    p, r, f = prf1(3, 1, 0)
    assert (p, r) == (0.75, 1.0) and f == pytest.approx(6 / 7, abs=1e-15)


def test_precision_undefined_recall_defined():
    assert prf1(0, 0, 2) == (None, 0.0, None)


def test_recall_undefined_precision_defined():
    assert prf1(0, 3, 0) == (0.0, None, None)


def test_both_zero_gives_f1_zero():
    assert prf1(0, 2, 2) == (0.0, 0.0, 0.0)


def test_nothing_anywhere_is_all_undefined():
    assert prf1(0, 0, 0) == (None, None, None)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_prf1_bounds(tp, fp, fn):
    p, r, f = prf1(tp, fp, fn)
    assert (p is None) == (tp + fp == 0)
    assert (r is None) == (tp + fn == 0)
    if f is not None:
        assert 0 <= f <= 1
        assert f <= 2 * min(p, r) + 1e-15
        assert min(p, r) - 1e-15 <= f <= max(p, r) + 1e-15


def test_score_events_uses_each_series_own_threshold():
    idx = pd.date_range("2000-01-01", periods=10)
    obs = pd.Series([0, 0, 10, 0, 0, 0, 0, 10, 0, 0], index=idx, dtype=float)
    sim = obs * 0.5  # biased low; its own threshold scales with it
    assert score_events(obs, sim, 8.0, 4.0)[:3] == (2, 0, 0)
    assert score_events(obs, sim, 8.0, 8.0)[:3] == (0, 0, 2)


def test_score_events_drops_days_without_simulation():
    idx = pd.date_range("2000-01-01", periods=6)
    obs = pd.Series([0, 9, 0, 0, 9, 0], index=idx, dtype=float)
    sim = pd.Series([0, 9, 0, np.nan, np.nan, np.nan], index=idx)
    assert score_events(obs, sim, 5, 5)[:3] == (1, 0, 0)


def test_event_score_row():
    row = EventScore("g", "m", 2, 0, 0, 0, 2).as_row()
    assert row["precision"] is None and row["recall"] == 0.0 and row["f1"] is None
