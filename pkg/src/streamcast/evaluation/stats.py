"""Paired comparisons: Wilcoxon signed-rank test and Cohen's d."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

EXACT_MAX_N = 25


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of positive differences
    pvalue: float
    n: int  # non-zero differences
    method: str  # "exact", "approx" or "degenerate"

    @property
    def degenerate(self):
        return self.method == "degenerate"


def _differences(x, y=None):
    d = np.asarray(x, dtype=float)
    if y is not None:
        d = d - np.asarray(y, dtype=float)
    if np.any(~np.isfinite(d)):
        raise ValueError("paired values must be finite")
    return d


def signed_rank_null(doubled_ranks):
    """Counts of each attainable doubled positive-rank sum over all sign patterns.

    Ranks are doubled so mid-ranks of ties stay integral.
    """
    total = int(np.sum(doubled_ranks))
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y=None, method="auto") -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired values (or differences).

    Zero differences are dropped and tied magnitudes get mid-ranks. The null
    distribution is enumerated exactly for up to 25 pairs; larger samples
    use the normal approximation with tie and continuity corrections.
    """
    d = _differences(x, y)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "degenerate")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "approx"

    if method == "exact":
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = signed_rank_null(doubled)
        probs = counts / counts.sum()
        k = int(round(2 * w_plus))
        lower = probs[: k + 1].sum()
        upper = probs[k:].sum()
        p = min(1.0, 2.0 * min(lower, upper))
    elif method == "approx":
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        dev = abs(w_plus - mean) - 0.5
        if dev <= 0 or var <= 0:
            p = 1.0
        else:
            p = min(1.0, 2.0 * norm.sf(dev / math.sqrt(var)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return WilcoxonResult(w_plus, float(p), n, method)


def cohens_d(a, b=None):
    """Mean paired difference over its standard deviation (``n - 1`` denominator).

    With ``a`` the candidate model and larger scores better, a positive value
    favours ``a``. Returns ``None`` when the differences have no spread.
    """
    d = _differences(a, b)
    if d.size < 2:
        raise ValueError("Cohen's d needs at least 2 pairs")
    sd = float(np.std(d, ddof=1))
    if sd == 0:
        return None
    return float(np.mean(d)) / sd
