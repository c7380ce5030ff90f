"""Threshold-crossing events, window matching and precision/recall/F1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

MATCH_WINDOW_DAYS = 2


@dataclass(frozen=True)
class EventList:
    """Days on which a hydrograph crosses a threshold from below.

    ``positions`` index into the scored calendar; ``starts_above`` records a
    series that begins at or above the threshold, whose first day is counted
    as an event because the crossing itself is unobservable.
    """

    positions: np.ndarray
    dates: pd.DatetimeIndex | None = None
    threshold: float = np.nan
    starts_above: bool = False
    n_missing: int = 0

    def __len__(self):
        return len(self.positions)


def extract_events(flow, threshold) -> EventList:
    """Upward crossings of ``threshold``; missing days count as below it."""
    dates = flow.index if isinstance(flow, pd.Series) and isinstance(flow.index, pd.DatetimeIndex) else None
    q = np.asarray(flow, dtype=float)
    missing = np.isnan(q)
    above = np.where(missing, False, q >= threshold)
    prev = np.concatenate([[False], above[:-1]])
    pos = np.flatnonzero(above & ~prev)
    return EventList(
        positions=pos,
        dates=dates[pos] if dates is not None else None,
        threshold=float(threshold),
        starts_above=bool(above[:1].any()),
        n_missing=int(missing.sum()),
    )


def _as_days(events):
    if isinstance(events, EventList):
        return np.asarray(events.positions, dtype=np.int64)
    arr = np.asarray(events)
    if np.issubdtype(arr.dtype, np.datetime64):
        return arr.astype("datetime64[D]").astype(np.int64)
    return arr.astype(np.int64)


def match_events(predicted, observed, window=MATCH_WINDOW_DAYS):
    """One-to-one pairing of predicted and observed events at most ``window`` days apart.

    Returns ``(TP, FP, FN)``. Scanning both sorted lists and pairing the
    earliest compatible events yields a maximum matching because every
    observed event accepts the same-width interval of predicted days.
    """
    p = np.sort(_as_days(predicted))
    o = np.sort(_as_days(observed))
    i = j = tp = 0
    while i < len(p) and j < len(o):
        if p[i] < o[j] - window:
            i += 1
        elif o[j] < p[i] - window:
            j += 1
        else:
            tp += 1
            i += 1
            j += 1
    return tp, len(p) - tp, len(o) - tp


def prf1(tp, fp, fn):
    """Precision, recall and F1, with ``None`` marking an undefined score.

    Precision is undefined without predicted events, recall without observed
    events, and F1 whenever either side is; F1 is 0 when both are 0.
    """
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


@dataclass(frozen=True)
class EventScore:
    gauge_id: str
    model: str
    T: float
    lead: int
    tp: int
    fp: int
    fn: int
    starts_above: bool = False

    @property
    def precision(self):
        return prf1(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self):
        return prf1(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self):
        return prf1(self.tp, self.fp, self.fn)[2]

    def as_row(self):
        p, r, f = prf1(self.tp, self.fp, self.fn)
        return {
            "gauge_id": self.gauge_id,
            "model": self.model,
            "T": self.T,
            "lead": self.lead,
            "TP": self.tp,
            "FP": self.fp,
            "FN": self.fn,
            "precision": p,
            "recall": r,
            "f1": f,
        }


EVENT_SCORE_COLUMNS = ["gauge_id", "model", "T", "lead", "TP", "FP", "FN", "precision", "recall", "f1"]


def score_events(observed, simulated, obs_threshold, sim_threshold, window=MATCH_WINDOW_DAYS):
    """Match events of two hydrographs on their shared calendar.

    Each series is compared against its own threshold. Days without a
    simulated value are dropped from both series before events are found.
    """
    obs = pd.Series(observed, dtype=float)
    sim = pd.Series(simulated, dtype=float).dropna()
    calendar = sim.index.intersection(obs.index)
    if len(calendar) == 0:
        raise ValueError("observed and simulated series share no dates")
    sim = sim.reindex(calendar)
    obs = obs.reindex(calendar)
    ev_obs = extract_events(obs, obs_threshold)
    ev_sim = extract_events(sim, sim_threshold)
    tp, fp, fn = match_events(ev_sim, ev_obs, window)
    return tp, fp, fn, ev_sim.starts_above or ev_obs.starts_above
