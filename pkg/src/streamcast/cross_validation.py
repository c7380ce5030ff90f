"""Train/test split plans that hold out gauges and time periods together.

Gauges are split spatially (random k-fold, or one fold per continent,
climate zone or terminal basin). Time is split into contiguous test windows,
and training days within ``buffer_days`` of a test window are discarded. A
plan is the cross product of spatial and temporal folds, so every
(gauge, day) is tested exactly once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

BUFFER_DAYS = 365
SCHEMES = ("random", "continent", "climate", "terminal-basin")
GROUP_KEYS = {"continent": "continent", "climate": "climate_zone", "terminal-basin": "terminal_basin_id"}
PAPER_GROUP_COUNTS = {"random": 10, "continent": 6, "climate": 13, "terminal-basin": 8}


class SplitError(ValueError):
    pass


def _to_date(d) -> date:
    if isinstance(d, date):
        return d
    return date.fromisoformat(str(d)[:10])


@dataclass(frozen=True)
class DateRange:
    """Inclusive range of days."""

    start: date
    end: date

    def __post_init__(self):
        object.__setattr__(self, "start", _to_date(self.start))
        object.__setattr__(self, "end", _to_date(self.end))
        if self.end < self.start:
            raise SplitError(f"empty date range {self.start}..{self.end}")

    @property
    def n_days(self):
        return (self.end - self.start).days + 1

    def as_list(self):
        return [self.start.isoformat(), self.end.isoformat()]


@dataclass(frozen=True)
class TemporalFold:
    test: DateRange
    train: tuple  # of DateRange


@dataclass
class Fold:
    fold_id: str
    test_gauges: list
    train_gauges: list
    test_ranges: list
    train_ranges: list

    def to_dict(self):
        return {
            "fold_id": self.fold_id,
            "test_gauges": list(self.test_gauges),
            "train_gauges": list(self.train_gauges),
            "test_ranges": [r.as_list() for r in self.test_ranges],
            "train_ranges": [r.as_list() for r in self.train_ranges],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            fold_id=d["fold_id"],
            test_gauges=list(d["test_gauges"]),
            train_gauges=list(d["train_gauges"]),
            test_ranges=[DateRange(*r) for r in d["test_ranges"]],
            train_ranges=[DateRange(*r) for r in d["train_ranges"]],
        )


@dataclass
class SplitPlan:
    scheme: str
    seed: int | None
    folds: list = field(default_factory=list)
    buffer_days: int = BUFFER_DAYS
    pairing: str = "cross-product of spatial and temporal folds"

    def to_dict(self):
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "buffer_days": self.buffer_days,
            "pairing": self.pairing,
            "folds": [f.to_dict() for f in self.folds],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            scheme=d["scheme"],
            seed=d["seed"],
            folds=[Fold.from_dict(f) for f in d["folds"]],
            buffer_days=d.get("buffer_days", BUFFER_DAYS),
            pairing=d.get("pairing", cls.pairing),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


# --------------------------------------------------------------------------
# spatial


def random_spatial_folds(gauges, k=10, seed=0):
    """Shuffle with ``seed`` and chunk into ``k`` near-equal folds.

    Leading folds take one extra gauge each when ``len(gauges)`` is not a
    multiple of ``k``.
    """
    gauges = list(gauges)
    if len(set(gauges)) != len(gauges):
        raise SplitError("duplicate gauge ids")
    if not 1 <= k <= len(gauges):
        raise SplitError(f"k={k} must lie in [1, {len(gauges)}]")
    order = np.random.default_rng(seed).permutation(len(gauges))
    shuffled = [gauges[i] for i in order]
    base, extra = divmod(len(gauges), k)
    folds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(sorted(shuffled[start : start + size]))
        start += size
    return folds


def grouped_folds(labels: dict, expected_k=None):
    """One fold per distinct label; ``labels`` maps gauge id to its group.

    Returns ``(group_names, folds)`` in sorted group order.
    """
    unlabeled = sorted(g for g, lab in labels.items() if lab is None or str(lab) == "" or lab != lab)
    if unlabeled:
        raise SplitError(f"gauges without a group label: {', '.join(map(str, unlabeled))}")
    groups = sorted({str(v) for v in labels.values()})
    if expected_k is not None and len(groups) != expected_k:
        raise SplitError(f"expected {expected_k} groups, found {len(groups)}")
    folds = [sorted(g for g, lab in labels.items() if str(lab) == name) for name in groups]
    return groups, folds


# --------------------------------------------------------------------------
# temporal


def temporal_folds(start, end, n_folds=1, buffer_days=BUFFER_DAYS, test_ranges=None):
    """Contiguous test windows with buffered training complements.

    Training excludes every day within ``buffer_days`` of the test window,
    so the closest train and test days are ``buffer_days + 1`` apart. With
    ``test_ranges`` given explicitly they replace the equal-length windows;
    days of ``[start, end]`` outside every test range are never tested.
    """
    start, end = _to_date(start), _to_date(end)
    span = (end - start).days + 1
    if test_ranges is None:
        if n_folds < 1:
            raise SplitError("n_folds must be >= 1")
        if span < n_folds:
            raise SplitError(f"need at least {n_folds} days, got {span}")
        bounds = np.linspace(0, span, n_folds + 1).round().astype(int)
        windows = [
            DateRange(start + timedelta(days=int(a)), start + timedelta(days=int(b) - 1))
            for a, b in zip(bounds[:-1], bounds[1:])
        ]
    else:
        windows = sorted((DateRange(*r) if not isinstance(r, DateRange) else r for r in test_ranges),
                         key=lambda r: r.start)
        for r in windows:
            if r.start < start or r.end > end:
                raise SplitError(f"test range {r.as_list()} outside {start}..{end}")
        for a, b in zip(windows, windows[1:]):
            if b.start <= a.end:
                raise SplitError("test ranges overlap")

    gap = timedelta(days=buffer_days + 1)
    folds = []
    for w in windows:
        train = []
        before_end = w.start - gap
        if before_end >= start:
            train.append(DateRange(start, before_end))
        after_start = w.end + gap
        if after_start <= end:
            train.append(DateRange(after_start, end))
        if not train:
            need = buffer_days + 1 + w.n_days
            raise SplitError(
                f"no training days left around test window {w.as_list()}; "
                f"the range must span at least {need + 1} days"
            )
        folds.append(TemporalFold(w, tuple(train)))
    return folds


# --------------------------------------------------------------------------
# plans


def _labels(records, key):
    return {r.gauge_id: getattr(r, key) for r in records}


def make_plan(records, scheme="random", k=None, seed=0, start=None, end=None,
              n_time_folds=2, buffer_days=BUFFER_DAYS, test_ranges=None) -> SplitPlan:
    """Cross the spatial folds of ``scheme`` with temporal folds over ``[start, end]``."""
    if scheme not in SCHEMES:
        raise SplitError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    ids = sorted(r.gauge_id for r in records)
    if scheme == "random":
        names = None
        spatial = random_spatial_folds(ids, k or PAPER_GROUP_COUNTS["random"], seed)
    else:
        names, spatial = grouped_folds(_labels(records, GROUP_KEYS[scheme]), k)
    if start is None:
        start = min(r.dates[0] for r in records).date()
    if end is None:
        end = max(r.dates[-1] for r in records).date()
    temporal = temporal_folds(start, end, n_time_folds, buffer_days, test_ranges)

    plan = SplitPlan(scheme=scheme, seed=seed if scheme == "random" else None, buffer_days=buffer_days)
    for si, test_g in enumerate(spatial):
        train_g = sorted(set(ids) - set(test_g))
        sname = names[si] if names else f"s{si:02d}"
        for ti, tf in enumerate(temporal):
            plan.folds.append(
                Fold(
                    fold_id=f"{sname}-t{ti:02d}",
                    test_gauges=list(test_g),
                    train_gauges=train_g,
                    test_ranges=[tf.test],
                    train_ranges=list(tf.train),
                )
            )
    return plan


def check_plan(plan: SplitPlan):
    """Raise ``SplitError`` if any fold leaks gauges or violates the time buffer."""
    for f in plan.folds:
        shared = set(f.test_gauges) & set(f.train_gauges)
        if shared:
            raise SplitError(f"fold {f.fold_id}: gauges on both sides: {sorted(shared)}")
        for tr in f.train_ranges:
            for te in f.test_ranges:
                if tr.end >= te.start and tr.start <= te.end:
                    raise SplitError(f"fold {f.fold_id}: train and test ranges overlap")
                gap = (te.start - tr.end).days if tr.end < te.start else (tr.start - te.end).days
                if gap <= plan.buffer_days:
                    raise SplitError(f"fold {f.fold_id}: train within {plan.buffer_days} days of test")


def as_date_pairs(ranges):
    return [(r.start.isoformat(), r.end.isoformat()) for r in ranges]
