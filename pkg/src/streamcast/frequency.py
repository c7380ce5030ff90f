"""Return-period flow thresholds from log-Pearson Type III fits to annual maxima.

Follows the Bulletin 17b moment recipe with station skew only: the mean,
standard deviation and bias-corrected skew of log10 annual maxima define the
distribution, and the Wilson-Hilferty transform turns a standard normal
quantile into the Pearson III frequency factor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import norm
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

logger = logging.getLogger(__name__)

DEFAULT_RETURN_PERIODS = (1, 2, 5, 10)
#: A "1-year" event is evaluated at this return period (annual exceedance 0.990).
ONE_YEAR_RETURN_PERIOD = 1.01
MIN_YEARS = 10
MIN_COVERAGE = 0.8
SKEW_EPS = 1e-6


class FrequencyFitError(ValueError):
    """Annual maxima cannot support a log-Pearson III fit."""


@dataclass(frozen=True)
class AnnualMaximaSeries:
    gauge_id: str
    source: str
    years: np.ndarray
    maxima: np.ndarray

    def __len__(self):
        return len(self.maxima)


@dataclass(frozen=True)
class LP3Moments:
    mean: float
    std: float
    skew: float
    n: int


@dataclass
class ReturnPeriodTable:
    gauge_id: str
    source: str
    thresholds: dict
    moments: LP3Moments
    usable: bool = True

    @property
    def n_years(self):
        return self.moments.n


def extract_annual_maxima(series: pd.Series, gauge_id="", source="observed",
                          start_month=1, min_coverage=MIN_COVERAGE) -> AnnualMaximaSeries:
    """Largest daily flow of each (hydrological) year with enough observed days.

    A year starting in ``start_month`` is labelled by the calendar year it
    starts in. Years with fewer than ``min_coverage`` of their days present
    are omitted, including partial years at either end of the record.
    """
    s = pd.Series(series, dtype=float)
    if not isinstance(s.index, pd.DatetimeIndex):
        raise TypeError("series must be indexed by date")
    shifted = s.index - pd.DateOffset(months=start_month - 1)
    label = shifted.year
    years, maxima = [], []
    for year, chunk in s.groupby(label):
        first = pd.Timestamp(year=year, month=start_month, day=1)
        n_days = (first + pd.DateOffset(years=1) - first).days
        present = chunk.notna().sum()
        if present / n_days >= min_coverage:
            years.append(int(year))
            maxima.append(float(chunk.max()))
    if not years:
        raise FrequencyFitError(f"gauge {gauge_id}: no year reaches {min_coverage:.0%} coverage")
    return AnnualMaximaSeries(gauge_id, source, np.asarray(years), np.asarray(maxima))


def fit_lp3(maxima, min_years=MIN_YEARS) -> LP3Moments:
    """Moments of log10 annual maxima with the bias-corrected station skew

    ``G = n * sum((x - mean)**3) / ((n - 1) * (n - 2) * s**3)``, where ``s``
    uses the ``n - 1`` denominator.
    """
    x = np.asarray(getattr(maxima, "maxima", maxima), dtype=float)
    n = x.size
    if n < max(min_years, 3):
        raise FrequencyFitError(f"sample too small: {n} years, need {max(min_years, 3)}")
    if np.any(~np.isfinite(x)):
        raise FrequencyFitError("annual maxima contain non-finite values")
    if np.any(x <= 0):
        raise FrequencyFitError("non-positive annual maximum; zero-flow adjustment is disabled")
    logs = np.log10(x)
    mean = logs.mean()
    dev = logs - mean
    std = math.sqrt(float(np.sum(dev**2)) / (n - 1))
    if std == 0 or std < 1e-12 * max(1.0, abs(mean)):
        raise FrequencyFitError("degenerate: zero variance in log annual maxima")
    skew = n * float(np.sum(dev**3)) / ((n - 1) * (n - 2) * std**3)
    return LP3Moments(float(mean), std, skew, n)


def effective_return_period(T: float) -> float:
    if T == 1:
        return ONE_YEAR_RETURN_PERIOD
    if not T > 1:
        raise ValueError(f"return period must exceed 1 year, got {T}")
    return float(T)


def frequency_factor(skew, T):
    """Pearson III frequency factor at annual exceedance probability ``1/T``.

    Wilson-Hilferty: ``K = (2/G) * ((1 + G*z/6 - G**2/36)**3 - 1)`` with ``z``
    the standard normal quantile of ``1 - 1/T``; ``K = z`` as ``G -> 0``.
    """
    T = effective_return_period(T)
    z = norm.ppf(1.0 - 1.0 / T)
    if abs(skew) < SKEW_EPS:
        return float(z)
    return float((2.0 / skew) * ((1.0 + skew * z / 6.0 - skew**2 / 36.0) ** 3 - 1.0))


def threshold(moments: LP3Moments, T) -> float:
    return float(10.0 ** (moments.mean + frequency_factor(moments.skew, T) * moments.std))


class LogPearson3(BaseEstimator):
    """Estimator wrapper: ``fit`` on annual maxima, ``predict`` flows for return periods."""

    def __init__(self, min_years=MIN_YEARS):
        self.min_years = min_years

    def fit(self, maxima, y=None):
        m = fit_lp3(maxima, self.min_years)
        self.moments_ = m
        self.mean_, self.std_, self.skew_, self.n_years_ = m.mean, m.std, m.skew, m.n
        return self

    def predict(self, return_periods):
        check_is_fitted(self, "moments_")
        return np.array([threshold(self.moments_, T) for T in np.atleast_1d(return_periods)])


def build_table(series, gauge_id, source, return_periods=DEFAULT_RETURN_PERIODS,
                min_years=MIN_YEARS, start_month=1, min_coverage=MIN_COVERAGE) -> ReturnPeriodTable:
    ams = extract_annual_maxima(series, gauge_id, source, start_month, min_coverage)
    moments = fit_lp3(ams, min_years)
    thresholds = {T: threshold(moments, T) for T in sorted(return_periods)}
    values = list(thresholds.values())
    usable = all(b > a for a, b in zip(values, values[1:]))
    return ReturnPeriodTable(gauge_id, source, thresholds, moments, usable)


@dataclass
class TableSet:
    tables: dict = field(default_factory=dict)  # (gauge_id, source) -> ReturnPeriodTable
    skipped: list = field(default_factory=list)  # {"gauge_id", "source", "reason"}

    def get(self, gauge_id, source):
        return self.tables.get((gauge_id, source))

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for (gauge, source), t in sorted(self.tables.items()):
            for T, q in t.thresholds.items():
                rows.append(
                    {
                        "gauge_id": gauge,
                        "source": source,
                        "T": T,
                        "threshold": q,
                        "n_years": t.moments.n,
                        "mean_log": t.moments.mean,
                        "std_log": t.moments.std,
                        "skew_log": t.moments.skew,
                    }
                )
        return pd.DataFrame(
            rows, columns=["gauge_id", "source", "T", "threshold", "n_years", "mean_log", "std_log", "skew_log"]
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "TableSet":
        out = cls()
        for (gauge, source), g in frame.groupby(["gauge_id", "source"], sort=True):
            first = g.iloc[0]
            moments = LP3Moments(float(first.mean_log), float(first.std_log), float(first.skew_log), int(first.n_years))
            thresholds = {_as_period(T): float(q) for T, q in zip(g["T"], g["threshold"])}
            out.tables[(str(gauge), str(source))] = ReturnPeriodTable(str(gauge), str(source), thresholds, moments)
        return out


def _as_period(T):
    T = float(T)
    return int(T) if T.is_integer() else T


def build_tables(series_by_source, return_periods=DEFAULT_RETURN_PERIODS, min_years=MIN_YEARS,
                 start_month=1, min_coverage=MIN_COVERAGE) -> TableSet:
    """Fit one table per (gauge, source); failures land in the skip report.

    ``series_by_source`` maps a source tag (``"observed"`` or a model name)
    to a dict of gauge id -> daily flow series.
    """
    out = TableSet()
    for source, by_gauge in series_by_source.items():
        for gauge_id, series in by_gauge.items():
            try:
                table = build_table(series, gauge_id, source, return_periods, min_years, start_month, min_coverage)
            except FrequencyFitError as exc:
                out.skipped.append({"gauge_id": gauge_id, "source": source, "reason": str(exc)})
                continue
            if not table.usable:
                out.skipped.append({"gauge_id": gauge_id, "source": source, "reason": "thresholds not monotone"})
                continue
            out.tables[(gauge_id, source)] = table
    return out
