"""Hydrograph goodness-of-fit scores.

Undefined scores (zero observed variance, zero observed mean, too few
paired days) are returned as ``None`` rather than infinities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

LOG_EPSILON_FRACTION = 0.01

METRIC_NAMES = ["nse", "log_nse", "alpha_nse", "beta_nse", "kge", "log_kge", "beta_kge"]


@dataclass(frozen=True)
class HydroMetrics:
    nse: float | None
    log_nse: float | None
    alpha_nse: float | None
    beta_nse: float | None
    kge: float | None
    log_kge: float | None
    beta_kge: float | None
    n: int = 0

    def as_dict(self):
        return asdict(self)


def _paired(sim, obs):
    sim = np.asarray(sim, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if sim.shape != obs.shape:
        raise ValueError(f"sim and obs differ in shape: {sim.shape} vs {obs.shape}")
    ok = np.isfinite(sim) & np.isfinite(obs)
    return sim[ok], obs[ok]


def _flat(x):
    # exact test: np.std of a constant array can be a rounding-level nonzero
    return bool(np.ptp(x) == 0)


def nse(sim, obs):
    s, o = _paired(sim, obs)
    if o.size < 2:
        return None
    denom = np.sum((o - o.mean()) ** 2)
    if _flat(o) or denom == 0:
        return None
    return float(1.0 - np.sum((s - o) ** 2) / denom)


def alpha_nse(sim, obs):
    s, o = _paired(sim, obs)
    if o.size < 2 or _flat(o):
        return None
    return float(s.std() / o.std())


def beta_nse(sim, obs):
    s, o = _paired(sim, obs)
    if o.size < 2 or _flat(o):
        return None
    return float((s.mean() - o.mean()) / o.std())


def beta_kge(sim, obs):
    s, o = _paired(sim, obs)
    if o.size == 0 or o.mean() == 0:
        return None
    return float(s.mean() / o.mean())


def kge(sim, obs):
    """``1 - sqrt((r-1)**2 + (alpha-1)**2 + (beta-1)**2)``."""
    s, o = _paired(sim, obs)
    if o.size < 2 or _flat(o) or o.mean() == 0:
        return None
    if _flat(s):
        return None
    r = np.corrcoef(s, o)[0, 1]
    alpha = s.std() / o.std()
    beta = s.mean() / o.mean()
    return float(1.0 - math.sqrt((r - 1) ** 2 + (alpha - 1) ** 2 + (beta - 1) ** 2))


def _log_pair(sim, obs):
    s, o = _paired(sim, obs)
    if o.size == 0:
        return None
    eps = LOG_EPSILON_FRACTION * o.mean()
    if not eps > 0:
        return None
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.log(s + eps), np.log(o + eps)


def log_nse(sim, obs):
    pair = _log_pair(sim, obs)
    return None if pair is None else nse(*pair)


def log_kge(sim, obs):
    pair = _log_pair(sim, obs)
    return None if pair is None else kge(*pair)


def hydrograph_metrics(sim, obs) -> HydroMetrics:
    s, o = _paired(sim, obs)
    return HydroMetrics(
        nse=nse(s, o),
        log_nse=log_nse(s, o),
        alpha_nse=alpha_nse(s, o),
        beta_nse=beta_nse(s, o),
        kge=kge(s, o),
        log_kge=log_kge(s, o),
        beta_kge=beta_kge(s, o),
        n=int(o.size),
    )
