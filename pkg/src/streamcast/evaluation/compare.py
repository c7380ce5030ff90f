"""Per-gauge paired comparison of two models' scores, optionally by group."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .stats import cohens_d, wilcoxon_signed_rank

TIE_TOLERANCE = 1e-9
GROUPINGS = {"all": [], "continent": ["continent"], "T": ["T"], "lead": ["lead"]}


@dataclass
class PairedComparison:
    metric: str
    group: dict
    n: int
    frac_better: float  # A > B
    frac_at_least: float  # A >= B, ties within TIE_TOLERANCE
    pvalue: float
    cohens_d: float | None
    flags: list = field(default_factory=list)
    mean_a: float = np.nan
    mean_b: float = np.nan

    def as_dict(self):
        return asdict(self)


def paired_comparison(a, b, metric="f1", group=None) -> PairedComparison:
    """Compare paired arrays where larger values are better for ``a``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = a - b
    flags = []
    test = wilcoxon_signed_rank(diff)
    if test.degenerate:
        flags.append("wilcoxon_degenerate")
    d = cohens_d(diff) if diff.size >= 2 else None
    if d is None:
        flags.append("cohens_d_undefined")
    return PairedComparison(
        metric=metric,
        group=dict(group or {}),
        n=int(diff.size),
        frac_better=float(np.mean(diff > TIE_TOLERANCE)),
        frac_at_least=float(np.mean(diff >= -TIE_TOLERANCE)),
        pvalue=test.pvalue,
        cohens_d=d,
        flags=flags,
        mean_a=float(a.mean()),
        mean_b=float(b.mean()),
    )


def _group_keys(grouping):
    if isinstance(grouping, str):
        if grouping not in GROUPINGS:
            raise ValueError(f"unknown grouping {grouping!r}; choose from {sorted(GROUPINGS)}")
        return list(GROUPINGS[grouping])
    keys = []
    for g in grouping:
        keys.extend(GROUPINGS.get(g, [g]))
    return keys


def compare_models(scores_a: pd.DataFrame, scores_b: pd.DataFrame, metric="f1", grouping="all",
                   pair_on=("gauge_id", "T", "lead"), continents=None):
    """Paired comparisons of ``metric`` between two score tables.

    Rows pair up on ``pair_on``; only pairs where both scores are defined
    enter a comparison. Groups with no defined pairs are omitted and noted.

    Returns
    -------
    comparisons : list of PairedComparison
    notes : list of str
    """
    keys = _group_keys(grouping)
    pair_on = list(pair_on)
    a, b = scores_a.copy(), scores_b.copy()
    if continents is not None:
        for frame in (a, b):
            frame["continent"] = frame["gauge_id"].map(continents)
    merged = a.merge(b, on=pair_on + [k for k in keys if k not in pair_on and k in a and k in b],
                     suffixes=("_a", "_b"), how="inner")
    for k in keys:
        if k not in merged.columns:
            raise KeyError(f"grouping column {k!r} not available in scores")
    ca, cb = f"{metric}_a", f"{metric}_b"
    merged = merged[merged[ca].notna() & merged[cb].notna()]
    notes, out = [], []
    groups = merged.groupby(keys, sort=True) if keys else [((), merged)]
    seen = set()
    for key, g in groups:
        key = key if isinstance(key, tuple) else (key,)
        seen.add(key)
        label = dict(zip(keys, [_plain(k) for k in key]))
        if len(g) == 0:
            notes.append(f"group {label}: no pairs with both scores defined")
            continue
        out.append(paired_comparison(g[ca], g[cb], metric, label))
    if keys:
        every = pd.concat([a[keys], b[keys]]).drop_duplicates()
        for row in every.itertuples(index=False):
            key = tuple(row)
            if key not in seen:
                notes.append(f"group {dict(zip(keys, map(_plain, key)))}: no pairs with both scores defined")
    elif not out:
        notes.append("no pairs with both scores defined")
    return out, notes


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    return x


def box_stats(values):
    """Quartiles plus whiskers at the most extreme points within 1.5 IQR."""
    v = np.sort(np.asarray(values, dtype=float))
    v = v[np.isfinite(v)]
    if v.size == 0:
        return None
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "n": int(v.size),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "n_outliers": int(v.size - inside.size),
    }
