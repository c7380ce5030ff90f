import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from streamcast import autodiff as ad
from streamcast.distributions import (
    ald_cdf,
    ald_logpdf,
    ald_median,
    ald_nll,
    ald_nll_tensor,
    ald_quantile,
)
from helpers import central_difference, relative_error


def quadrature_cdf(y, mu, b, tau):
    """CDF by integrating the density numerically (independent of the closed form)."""
    pdf = lambda v: math.exp(ald_logpdf(v, mu, b, tau))  # noqa: E731
    if y <= mu:
        return integrate.quad(pdf, -np.inf, y, epsabs=1e-14, epsrel=1e-13)[0]
    left = integrate.quad(pdf, -np.inf, mu, epsabs=1e-14, epsrel=1e-13)[0]
    return left + integrate.quad(pdf, mu, y, epsabs=1e-14, epsrel=1e-13)[0]


def numeric_median(mu, b, tau):
    span = 60 * b / min(tau, 1 - tau)
    return optimize.brentq(lambda y: quadrature_cdf(y, mu, b, tau) - 0.5, mu - span, mu + span, xtol=1e-13, rtol=1e-15)


taus = st.floats(0.02, 0.98)
scales = st.floats(0.05, 5.0)
locs = st.floats(-10, 10)


def test_nll_at_mode_symmetric_unit():
    assert ald_nll(0.0, 0.0, 1.0, 0.5) == pytest.approx(-math.log(0.25), abs=1e-12)


def test_median_examples():
    assert ald_median(1.7, 2.0, 0.5) == 1.7
    for mu, b, tau in [(0.0, 1.0, 0.2), (3.0, 2.0, 0.8)]:
        assert abs(ald_median(mu, b, tau) - numeric_median(mu, b, tau)) < 1e-8


@settings(max_examples=40)
@given(mu=locs, b=scales, tau=taus)
def test_median_matches_quadrature_inversion(mu, b, tau):
    assert abs(ald_median(mu, b, tau) - numeric_median(mu, b, tau)) < 1e-8


@settings(max_examples=40)
@given(mu=locs, b=scales, tau=taus, y=st.floats(-20, 20))
def test_cdf_matches_quadrature(mu, b, tau, y):
    assert ald_cdf(y, mu, b, tau) == pytest.approx(quadrature_cdf(y, mu, b, tau), abs=1e-10)


@given(mu=locs, b=scales, tau=taus)
def test_mass_below_location_is_tau(mu, b, tau):
    assert ald_cdf(mu, mu, b, tau) == pytest.approx(tau, abs=1e-15)


@given(mu=locs, b=scales, tau=taus, p=st.floats(1e-6, 1 - 1e-6))
def test_quantile_inverts_cdf(mu, b, tau, p):
    assert ald_cdf(ald_quantile(p, mu, b, tau), mu, b, tau) == pytest.approx(p, abs=1e-9)


@given(mu=locs, b=scales, y=st.floats(-20, 20))
def test_symmetric_case_is_laplace(mu, b, y):
    # tau = 1/2 gives a Laplace density with scale 2b
    expected = -stats.laplace(loc=mu, scale=2 * b).logpdf(y)
    assert ald_nll(y, mu, b, 0.5) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_density_integrates_to_one():
    for mu, b, tau in [(0, 1, 0.5), (2, 0.3, 0.1), (-1, 4, 0.93)]:
        total = integrate.quad(lambda v: math.exp(ald_logpdf(v, mu, b, tau)), -np.inf, np.inf)[0]
        assert total == pytest.approx(1.0, abs=1e-9)


def test_nll_unimodal_in_scale():
    rng = np.random.default_rng(0)
    resid = rng.laplace(size=200)
    grid = np.linspace(0.05, 5, 400)
    values = np.array([ald_nll(resid, 0.0, b, 0.3) for b in grid])
    k = int(np.argmin(values))
    assert 0 < k < len(grid) - 1
    assert np.all(np.diff(values[: k + 1]) < 0)
    assert np.all(np.diff(values[k:]) > 0)


def test_masking_excludes_entries_and_all_masked_raises():
    y = np.array([0.0, 100.0])
    assert ald_nll(y, 0.0, 1.0, 0.5, mask=[True, False]) == pytest.approx(-math.log(0.25))
    with pytest.raises(ValueError, match="no training signal"):
        ald_nll(y, 0.0, 1.0, 0.5, mask=[False, False])


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        ald_nll(0.0, 0.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        ald_median(0.0, 1.0, 1.0)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**31 - 1))
def test_tensor_nll_value_and_gradients(seed):
    r = np.random.default_rng(seed)
    shape = (3, 8)
    y = r.normal(size=shape)
    mask = r.random(shape) < 0.8
    mask[0, 0] = True
    raw = {"mu": r.normal(size=shape), "zb": r.normal(size=shape), "zt": r.normal(size=shape)}

    def build(g, t):
        b = ad.softplus(t["zb"])
        tau = ad.sigmoid(t["zt"])
        return ald_nll_tensor(y, t["mu"], b, tau, mask)

    g = ad.Graph()
    loss = build(g, {k: g.param(k, v) for k, v in raw.items()})
    b = np.logaddexp(0, raw["zb"])
    tau = 1 / (1 + np.exp(-raw["zt"]))
    assert float(loss.value) == pytest.approx(ald_nll(y, raw["mu"], b, tau, mask), rel=1e-12)

    grads = ad.backward(g, loss)

    def f():
        g2 = ad.Graph()
        return float(build(g2, {k: g2.const(v) for k, v in raw.items()}).value)

    for k, v in raw.items():
        assert relative_error(grads[k], central_difference(f, v)) <= 1e-4
