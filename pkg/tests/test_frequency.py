import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from streamcast.frequency import (
    ONE_YEAR_RETURN_PERIOD,
    FrequencyFitError,
    LogPearson3,
    LP3Moments,
    TableSet,
    build_table,
    build_tables,
    extract_annual_maxima,
    fit_lp3,
    frequency_factor,
    threshold,
)


def daily(values_by_year, start_year=2000):
    """Daily series: one entry per year, either a scalar or a callable day-index -> value."""
    parts = []
    for k, v in enumerate(values_by_year):
        idx = pd.date_range(f"{start_year + k}-01-01", f"{start_year + k}-12-31", freq="D")
        parts.append(pd.Series(v(np.arange(len(idx))) if callable(v) else float(v), index=idx))
    return pd.concat(parts)


def pearson3_k_by_quadrature(skew, T):
    """Frequency factor from the gamma density integrated numerically (no closed-form ppf)."""
    p = 1 - 1 / T
    if skew == 0:
        return stats.norm.ppf(p)
    a = 4 / skew**2
    pdf = lambda x: math.exp((a - 1) * math.log(x) - x - math.lgamma(a))  # noqa: E731
    cdf = lambda x: integrate.quad(pdf, 0, x, epsabs=1e-13, epsrel=1e-12, limit=200)[0]  # noqa: E731
    target = p if skew > 0 else 1 - p
    g = optimize.brentq(lambda x: cdf(x) - target, 1e-12, a + 60 * math.sqrt(a), xtol=1e-13)
    standardized = (g - a) / math.sqrt(a)
    return standardized if skew > 0 else -standardized


# --------------------------------------------------------------------------
# annual maxima


def test_constant_series_gives_constant_maxima():
    ams = extract_annual_maxima(daily([5, 5, 5]))
    assert list(ams.years) == [2000, 2001, 2002]
    assert list(ams.maxima) == [5, 5, 5]


def test_low_coverage_year_omitted():
    s = daily([1, 2, 3])
    s[(s.index.year == 2001) & (s.index.dayofyear % 2 == 0)] = np.nan  # ~50% coverage
    ams = extract_annual_maxima(s)
    assert list(ams.years) == [2000, 2002]


def test_no_qualifying_year_raises():
    s = daily([1])
    s[:] = np.nan
    with pytest.raises(FrequencyFitError):
        extract_annual_maxima(s)


@settings(max_examples=30)
@given(st.lists(st.tuples(st.floats(1.0, 500.0), st.integers(0, 364)), min_size=1, max_size=6))
def test_known_peaks_recovered(peaks):
    fns = []
    for value, day in peaks:
        fns.append(lambda d, v=value, p=day: np.where(d == p, v, 0.5))
    ams = extract_annual_maxima(daily(fns))
    assert list(ams.maxima) == [v for v, _ in peaks]


def test_hydrological_year_offset():
    s = daily([1, 1, 1])
    s[pd.Timestamp("2000-11-15")] = 9.0
    s[pd.Timestamp("2001-09-15")] = 7.0
    ams = extract_annual_maxima(s, start_month=10, min_coverage=0.8)
    # water year labelled by its start: Oct 2000 - Sep 2001 holds both peaks
    assert dict(zip(ams.years, ams.maxima))[2000] == 9.0
    assert 1999 not in ams.years  # Jan-Sep 2000 is only 75% of a year


# --------------------------------------------------------------------------
# moments


def test_hand_calculation_n5():
    # log10 maxima are 1, 2, 2, 3, 5
    # mean 13/5 = 2.6; deviations -1.6 -0.6 -0.6 0.4 2.4
    # sum sq = 2.56+0.36+0.36+0.16+5.76 = 9.2; s^2 = 9.2/4 = 2.3
    # sum cubes = -4.096-0.216-0.216+0.064+13.824 = 9.36
    # G = 5*9.36 / (4*3*2.3**1.5)
    m = fit_lp3([10.0, 100.0, 100.0, 1000.0, 100000.0], min_years=5)
    assert m.n == 5
    assert m.mean == pytest.approx(2.6, abs=1e-14)
    assert m.std == pytest.approx(math.sqrt(2.3), abs=1e-14)
    assert m.skew == pytest.approx(46.8 / (12 * 2.3**1.5), abs=1e-13)


def test_matches_scipy_bias_corrected_skew(rng):
    x = rng.lognormal(1.0, 0.7, size=37)
    m = fit_lp3(x)
    logs = np.log10(x)
    assert m.std == pytest.approx(np.std(logs, ddof=1), rel=1e-13)
    assert m.skew == pytest.approx(stats.skew(logs, bias=False), rel=1e-10)


def test_lognormal_sample_has_near_zero_skew():
    x = np.random.default_rng(2024).lognormal(0.5, 0.8, size=10_000)
    assert abs(fit_lp3(x).skew) < 0.05


def test_degenerate_sample_rejected():
    with pytest.raises(FrequencyFitError, match="degenerate: zero variance"):
        fit_lp3([10.0] * 12)


def test_small_and_nonpositive_samples_rejected():
    with pytest.raises(FrequencyFitError, match="too small"):
        fit_lp3([1.0, 2.0, 3.0, 4.0, 5.0])
    with pytest.raises(FrequencyFitError, match="non-positive"):
        fit_lp3([0.0] + list(range(1, 12)))


# --------------------------------------------------------------------------
# frequency factor and thresholds


def test_zero_skew_median_threshold():
    m = LP3Moments(1.3, 0.4, 0.0, 20)
    assert threshold(m, 2) == pytest.approx(10**1.3, rel=1e-15)


@pytest.mark.parametrize("T", [1.01, 2, 5, 10, 100])
def test_zero_skew_equals_lognormal_quantile(T):
    m = LP3Moments(0.8, 0.35, 0.0, 20)
    expected = stats.lognorm(s=0.35 * math.log(10), scale=10**0.8).ppf(1 - 1 / T)
    assert threshold(m, T) == pytest.approx(expected, rel=1e-12)


def test_one_year_is_evaluated_at_1_01():
    assert ONE_YEAR_RETURN_PERIOD == 1.01
    assert frequency_factor(0.3, 1) == frequency_factor(0.3, 1.01)
    with pytest.raises(ValueError):
        frequency_factor(0.3, 0.5)


def test_tiny_skew_uses_normal_limit():
    assert frequency_factor(1e-7, 10) == pytest.approx(stats.norm.ppf(0.9), abs=1e-15)
    # continuity across the switch
    assert frequency_factor(2e-6, 10) == pytest.approx(stats.norm.ppf(0.9), abs=1e-5)


def test_quadrature_oracle_agrees_with_scipy():
    for skew, T in [(0.5, 10), (-0.7, 5), (1.0, 100)]:
        assert pearson3_k_by_quadrature(skew, T) == pytest.approx(stats.pearson3.ppf(1 - 1 / T, skew), abs=1e-8)


@pytest.mark.parametrize("skew", [-0.25, -0.1, 0.1, 0.25])
@pytest.mark.parametrize("T", [2, 5, 10, 100])
def test_wilson_hilferty_close_to_pearson3_for_moderate_skew(skew, T):
    assert frequency_factor(skew, T) == pytest.approx(pearson3_k_by_quadrature(skew, T), abs=1e-3)


def test_wilson_hilferty_specified_example():
    # skew 0.5, T 10: Wilson-Hilferty differs from the exact factor by about 1.3e-3
    wh = frequency_factor(0.5, 10)
    exact = pearson3_k_by_quadrature(0.5, 10)
    assert abs(wh - exact) < 2e-3


@settings(max_examples=50)
@given(skew=st.floats(-2.0, 2.0), t1=st.floats(1.01, 500), t2=st.floats(1.01, 500))
def test_frequency_factor_monotone_in_T(skew, t1, t2):
    if t1 + 1e-6 < t2:
        assert frequency_factor(skew, t1) < frequency_factor(skew, t2)


@settings(max_examples=30)
@given(seed=st.integers(0, 2**31 - 1), lam=st.floats(1e-3, 1e3))
def test_scale_equivariance(seed, lam):
    x = np.random.default_rng(seed).lognormal(1.0, 0.6, size=15)
    base, scaled = fit_lp3(x), fit_lp3(lam * x)
    assert scaled.skew == pytest.approx(base.skew, abs=1e-9)
    for T in (1, 2, 5, 10):
        assert threshold(scaled, T) == pytest.approx(lam * threshold(base, T), rel=1e-9)


def test_estimator_wrapper(rng):
    x = rng.lognormal(1.0, 0.5, size=20)
    est = LogPearson3().fit(x)
    assert est.n_years_ == 20
    out = est.predict([2, 10])
    assert out[0] == pytest.approx(threshold(fit_lp3(x), 2))
    assert out[1] > out[0]


# --------------------------------------------------------------------------
# tables


def _gauge_series(seed, n_years, scale=1.0):
    r = np.random.default_rng(seed)
    peaks = r.lognormal(1.0, 0.5, size=n_years)
    return daily([lambda d, p=p: np.where(d == 100, p, 0.2) * scale for p in peaks])


def test_build_table_thresholds_strictly_increase():
    table = build_table(_gauge_series(1, 15), "g1", "observed")
    values = [table.thresholds[T] for T in (1, 2, 5, 10)]
    assert table.usable and all(b > a for a, b in zip(values, values[1:]))
    assert table.n_years == 15


def test_short_record_goes_to_skip_report():
    ts = build_tables({"observed": {"long": _gauge_series(0, 12), "short": _gauge_series(1, 5)}}, min_years=10)
    assert ts.get("long", "observed") is not None
    assert ts.get("short", "observed") is None
    [entry] = ts.skipped
    assert entry["gauge_id"] == "short" and "too small" in entry["reason"]


def test_biased_model_gets_its_own_thresholds():
    obs = _gauge_series(3, 12)
    ts = build_tables({"observed": {"g": obs}, "model": {"g": obs * 0.6}})
    o, m = ts.get("g", "observed"), ts.get("g", "model")
    for T in (1, 2, 5, 10):
        assert m.thresholds[T] == pytest.approx(0.6 * o.thresholds[T], rel=1e-9)
        assert m.thresholds[T] < o.thresholds[T]


def test_table_set_round_trip():
    ts = build_tables({"observed": {"a": _gauge_series(4, 11), "b": _gauge_series(5, 13)}})
    frame = ts.to_frame()
    assert list(frame.columns) == ["gauge_id", "source", "T", "threshold", "n_years", "mean_log", "std_log", "skew_log"]
    back = TableSet.from_frame(frame)
    pd.testing.assert_frame_equal(back.to_frame(), frame)
