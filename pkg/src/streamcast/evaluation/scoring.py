"""Score prediction archives against observations: events and hydrograph metrics."""

from __future__ import annotations

import logging

import pandas as pd

from .. import archive as arc
from ..frequency import DEFAULT_RETURN_PERIODS, TableSet, build_tables
from .events import EVENT_SCORE_COLUMNS, MATCH_WINDOW_DAYS, EventScore, score_events
from .hydro import METRIC_NAMES, hydrograph_metrics

logger = logging.getLogger(__name__)

OBSERVED = "observed"


def frequency_series(records, archives, threshold_lead=0, start=None, end=None):
    """Daily series to fit return periods on: observations and each model's ``threshold_lead`` hydrograph."""
    series = {OBSERVED: {r.gauge_id: r.discharge.loc[start:end] for r in records}}
    for name, frame in archives.items():
        series[name] = {
            g: arc.hydrograph(frame, g, threshold_lead).loc[start:end] for g in arc.gauges(frame)
        }
    return series


def fit_return_periods(records, archives, return_periods=DEFAULT_RETURN_PERIODS, threshold_lead=0, **kw) -> TableSet:
    return build_tables(frequency_series(records, archives, threshold_lead), return_periods, **kw)


def event_scores(records, archives, tables: TableSet, return_periods=DEFAULT_RETURN_PERIODS,
                 leads=None, window=MATCH_WINDOW_DAYS, start=None, end=None):
    """Per (gauge, model, T, lead) TP/FP/FN and derived scores.

    Modelled events use the model's own thresholds and observed events the
    observed thresholds. Gauges lacking either table are reported in the
    returned skip list rather than scored.
    """
    rows, skipped = [], []
    by_id = {r.gauge_id: r for r in records}
    for name, frame in archives.items():
        model_leads = arc.leads(frame) if leads is None else leads
        for g in arc.gauges(frame):
            if g not in by_id:
                skipped.append({"gauge_id": g, "model": name, "reason": "no observations"})
                continue
            obs_table, sim_table = tables.get(g, OBSERVED), tables.get(g, name)
            if obs_table is None or sim_table is None:
                skipped.append({"gauge_id": g, "model": name, "reason": "no return-period table"})
                continue
            obs = by_id[g].discharge.loc[start:end]
            for lead in model_leads:
                sim = arc.hydrograph(frame, g, lead).loc[start:end]
                if sim.dropna().empty:
                    continue
                for T in return_periods:
                    tp, fp, fn, above = score_events(
                        obs, sim, obs_table.thresholds[T], sim_table.thresholds[T], window
                    )
                    rows.append(EventScore(g, name, T, lead, tp, fp, fn, above).as_row())
    return pd.DataFrame(rows, columns=EVENT_SCORE_COLUMNS), skipped


def hydro_scores(records, archives, leads=None, start=None, end=None):
    rows = []
    by_id = {r.gauge_id: r for r in records}
    for name, frame in archives.items():
        model_leads = arc.leads(frame) if leads is None else leads
        for g in arc.gauges(frame):
            if g not in by_id:
                continue
            obs = by_id[g].discharge.loc[start:end]
            for lead in model_leads:
                sim = arc.hydrograph(frame, g, lead).loc[start:end]
                common = sim.index.intersection(obs.index)
                m = hydrograph_metrics(sim.reindex(common), obs.reindex(common))
                rows.append({"gauge_id": g, "model": name, "lead": lead, **m.as_dict()})
    return pd.DataFrame(rows, columns=["gauge_id", "model", "lead", *METRIC_NAMES, "n"])
