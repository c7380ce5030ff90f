"""Distribution summaries of event scores and static SVG box plots."""

from __future__ import annotations

from html import escape

import numpy as np
import pandas as pd

from .evaluation.compare import box_stats

SUMMARY_COLUMNS = ["model", "T", "lead", "metric", "n", "q1", "median", "q3",
                   "whisker_low", "whisker_high", "n_outliers"]

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


def summarize(scores: pd.DataFrame, by, metrics=("precision", "recall", "f1")) -> pd.DataFrame:
    """Box statistics of each metric per group; ``n`` counts defined scores only."""
    rows = []
    for key, g in scores.groupby(list(by), sort=True):
        key = key if isinstance(key, tuple) else (key,)
        for metric in metrics:
            stats = box_stats(g[metric].dropna())
            if stats is None:
                continue
            rows.append({**dict(zip(by, key)), "metric": metric, **stats})
    cols = list(by) + [c for c in SUMMARY_COLUMNS if c not in by]
    return pd.DataFrame(rows, columns=cols)


def boxplot_svg(summary: pd.DataFrame, category: str, title: str, width=720, height=360) -> str:
    """Grouped box plot: one box per (category value, model)."""
    models = sorted(summary["model"].unique())
    cats = sorted(summary[category].unique())
    left, right, top, bottom = 50, 20, 30, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    slot = plot_w / max(len(cats), 1)
    box_w = slot / (len(models) + 1)

    def y(v):
        return top + plot_h * (1.0 - float(np.clip(v, 0.0, 1.0)))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in np.linspace(0, 1, 6):
        out.append(f'<text x="{left - 6}" y="{y(tick) + 4:.1f}" text-anchor="end">{tick:.1f}</text>')
        out.append(f'<line x1="{left}" y1="{y(tick):.1f}" x2="{left + plot_w}" y2="{y(tick):.1f}" stroke="#ddd"/>')
    for ci, c in enumerate(cats):
        cx = left + slot * ci
        out.append(f'<text x="{cx + slot / 2:.1f}" y="{top + plot_h + 16}" text-anchor="middle">{escape(str(c))}</text>')
        for mi, m in enumerate(models):
            row = summary[(summary[category] == c) & (summary["model"] == m)]
            if row.empty:
                continue
            r = row.iloc[0]
            x0 = cx + box_w * (mi + 0.5)
            xm = x0 + box_w / 2
            color = PALETTE[mi % len(PALETTE)]
            out += [
                f'<line x1="{xm:.1f}" y1="{y(r.whisker_low):.1f}" x2="{xm:.1f}" y2="{y(r.q1):.1f}" stroke="{color}"/>',
                f'<line x1="{xm:.1f}" y1="{y(r.q3):.1f}" x2="{xm:.1f}" y2="{y(r.whisker_high):.1f}" stroke="{color}"/>',
                f'<rect x="{x0:.1f}" y="{y(r.q3):.1f}" width="{box_w:.1f}" height="{max(y(r.q1) - y(r.q3), 0.5):.1f}" '
                f'fill="{color}" fill-opacity="0.35" stroke="{color}"/>',
                f'<line x1="{x0:.1f}" y1="{y(r["median"]):.1f}" x2="{x0 + box_w:.1f}" y2="{y(r["median"]):.1f}" stroke="black" stroke-width="2"/>',
            ]
    out.append(f'<text x="{left + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(category)}</text>')
    for mi, m in enumerate(models):
        out.append(
            f'<rect x="{left + 10 + 110 * mi}" y="{top + 4}" width="10" height="10" fill="{PALETTE[mi % len(PALETTE)]}"/>'
            f'<text x="{left + 24 + 110 * mi}" y="{top + 13}">{escape(str(m))}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
