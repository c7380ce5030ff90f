"""Asymmetric Laplace distribution in the quantile-regression parameterization.

With location ``mu``, scale ``b > 0`` and asymmetry ``tau`` in (0, 1)::

    f(y) = tau * (1 - tau) / b * exp(-rho_tau((y - mu) / b))
    rho_tau(u) = u * (tau - 1[u < 0])

so ``tau`` is also the probability mass below ``mu``.
"""

import numpy as np

from . import autodiff as ad


def check_ald(b, tau):
    b = np.asarray(b, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(~(b > 0)):
        raise ValueError("scale must be strictly positive")
    if np.any(~((tau > 0) & (tau < 1))):
        raise ValueError("asymmetry must lie strictly inside (0, 1)")
    return b, tau


def pinball(u, tau):
    u = np.asarray(u, dtype=float)
    return u * (tau - (u < 0))


def ald_logpdf(y, mu, b, tau):
    b, tau = check_ald(b, tau)
    u = (np.asarray(y, dtype=float) - mu) / b
    return np.log(tau) + np.log1p(-tau) - np.log(b) - pinball(u, tau)


def ald_nll(y, mu, b, tau, mask=None):
    """Mean negative log-likelihood over unmasked entries.

    ``mask`` is truthy where the target is observed.
    """
    nll = -ald_logpdf(y, mu, b, tau)
    if mask is None:
        mask = True
    nll, mask = np.broadcast_arrays(nll, np.asarray(mask, dtype=bool))
    if not mask.any():
        raise ValueError("no training signal: every target is masked")
    return float(nll[mask].mean())


def ald_cdf(y, mu, b, tau):
    b, tau = check_ald(b, tau)
    u = (np.asarray(y, dtype=float) - mu) / b
    below = tau * np.exp(np.minimum(u, 0.0) * (1.0 - tau))
    above = 1.0 - (1.0 - tau) * np.exp(-np.maximum(u, 0.0) * tau)
    return np.where(u < 0, below, above)


def ald_quantile(p, mu, b, tau):
    """Inverse CDF; branch on whether ``p`` falls below the mass at ``mu``."""
    b, tau = check_ald(b, tau)
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lower = np.log(p / tau) / (1.0 - tau)
        upper = -np.log((1.0 - p) / (1.0 - tau)) / tau
    return mu + b * np.where(p <= tau, lower, upper)


def ald_median(mu, b, tau):
    return ald_quantile(0.5, mu, b, tau)


def ald_nll_tensor(y, mu: ad.Tensor, b: ad.Tensor, tau: ad.Tensor, mask):
    """Differentiable counterpart of :func:`ald_nll` on the autodiff tape.

    The pinball term is written as ``tau*relu(u) + (1-tau)*relu(-u)`` so it
    is piecewise smooth in every argument.
    """
    mask = np.asarray(mask, dtype=np.float64)
    n = mask.sum()
    if n == 0:
        raise ValueError("no training signal: every target is masked")
    g = mu.graph
    u = ad.mul(ad.sub(g.const(y), mu), ad.reciprocal(b))
    rho = ad.add(ad.mul(tau, ad.relu(u)), ad.mul(ad.sub(1.0, tau), ad.relu(ad.neg(u))))
    nll = ad.add(
        ad.sub(ad.log(b), ad.add(ad.log(tau), ad.log(ad.sub(1.0, tau)))),
        rho,
    )
    return ad.mul(ad.sum(ad.mul(nll, mask)), 1.0 / n)

