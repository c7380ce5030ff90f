"""Turn basin records into dense (hindcast, forecast, target) training samples."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .data import (
    DEFAULT_SUBSTITUTES,
    BasinRecord,
    FeatureStandardizer,
    ImputationError,
    impute,
)

logger = logging.getLogger(__name__)

HORIZON = 8  # lead days 0..7


@dataclass
class Preprocessor:
    """Training-period statistics for forcings, static attributes and discharge."""

    forcings: FeatureStandardizer
    statics: FeatureStandardizer
    target_mean: float
    target_std: float
    forecast_sources: tuple = ("hres",)
    substitutes: dict = field(default_factory=lambda: dict(DEFAULT_SUBSTITUTES))

    @classmethod
    def fit(cls, records, train_mask=None, forecast_sources=("hres",), substitutes=None):
        """``train_mask`` maps gauge id to a boolean array over the record's calendar."""
        frames, targets = [], []
        for r in records:
            sel = _mask_for(r, train_mask)
            frames.append(r.forcing_frame().loc[sel])
            targets.append(r.discharge.to_numpy()[sel])
        forcing_std = FeatureStandardizer().fit(pd.concat(frames, axis=0))
        attrs = pd.DataFrame([r.attributes for r in records])
        static_std = FeatureStandardizer().fit(attrs)
        q = np.concatenate(targets)
        q = q[~np.isnan(q)]
        if q.size < 2 or np.std(q) == 0:
            raise ValueError("training discharge has no variance")
        return cls(
            forcings=forcing_std,
            statics=static_std,
            target_mean=float(np.mean(q)),
            target_std=float(np.std(q)),
            forecast_sources=tuple(forecast_sources),
            substitutes=dict(DEFAULT_SUBSTITUTES if substitutes is None else substitutes),
        )

    @property
    def forcing_columns(self):
        return list(self.forcings.get_feature_names_out())

    @property
    def forecast_columns(self):
        return [c for c in self.forcing_columns if c.split(":", 1)[0] in self.forecast_sources]

    def static_vector(self, record: BasinRecord) -> np.ndarray:
        row = pd.DataFrame([record.attributes]).reindex(
            columns=self.statics.feature_names_in_
        )
        return self.statics.transform(row).fillna(0.0).to_numpy()[0]

    def standardize_target(self, q):
        return (np.asarray(q, dtype=float) - self.target_mean) / self.target_std

    def destandardize_target(self, z):
        return np.asarray(z, dtype=float) * self.target_std + self.target_mean

    def to_dict(self) -> dict:
        def std_dict(s):
            return {
                "features_in": list(map(str, s.feature_names_in_)),
                "features": list(map(str, s.feature_names_out_)),
                "mean": s.mean_.tolist(),
                "std": s.scale_.tolist(),
            }

        return {
            "forcings": std_dict(self.forcings),
            "statics": std_dict(self.statics),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "forecast_sources": list(self.forecast_sources),
            "substitutes": self.substitutes,
        }

    @classmethod
    def from_dict(cls, d) -> "Preprocessor":
        def std_from(s):
            out = FeatureStandardizer()
            out.feature_names_in_ = np.asarray(s["features_in"], dtype=object)
            out.feature_names_out_ = np.asarray(s["features"], dtype=object)
            out.dropped_features_ = [f for f in s["features_in"] if f not in s["features"]]
            out.mean_ = np.asarray(s["mean"], dtype=float)
            out.scale_ = np.asarray(s["std"], dtype=float)
            out.n_features_in_ = len(s["features_in"])
            return out

        return cls(
            forcings=std_from(d["forcings"]),
            statics=std_from(d["statics"]),
            target_mean=float(d["target_mean"]),
            target_std=float(d["target_std"]),
            forecast_sources=tuple(d["forecast_sources"]),
            substitutes=dict(d["substitutes"]),
        )


def _mask_for(record, masks):
    if masks is None:
        return np.ones(record.n_days, dtype=bool)
    return np.asarray(masks[record.gauge_id], dtype=bool)


@dataclass
class BasinArrays:
    gauge_id: str
    dates: pd.DatetimeIndex
    hindcast: np.ndarray  # (days, hindcast features incl. flags and statics)
    forecast: np.ndarray  # (days, forecast features incl. flags and statics)
    target: np.ndarray  # standardized discharge, NaN where missing
    target_allowed: np.ndarray  # bool, days usable as targets


class ForecastDataset:
    """Dense per-basin input matrices plus an index of valid forecast issue days.

    A sample is a (basin, issue day ``t``) pair: the encoder sees days
    ``t - hindcast_length .. t - 1`` and the decoder sees days ``t .. t + 7``.
    Issue days need a full hindcast window, a full forecast window, and at
    least one observed, allowed target inside the forecast window.
    """

    def __init__(self, records, preprocessor: Preprocessor, hindcast_length,
                 target_masks=None, statics_in_decoder=True):
        self.preprocessor = preprocessor
        self.hindcast_length = int(hindcast_length)
        self.statics_in_decoder = statics_in_decoder
        self.basins: list[BasinArrays] = []
        self.excluded: dict[str, str] = {}
        forecast_cols = preprocessor.forecast_columns
        for r in records:
            try:
                inputs, _ = impute(r, preprocessor.forcings, preprocessor.substitutes)
            except ImputationError as exc:
                logger.warning("excluding %s: %s", r.gauge_id, exc)
                self.excluded[r.gauge_id] = str(exc)
                continue
            statics = np.broadcast_to(preprocessor.static_vector(r), (r.n_days, len(preprocessor.statics.feature_names_out_)))
            hind = np.hstack([inputs.to_numpy(), statics])
            fcols = forecast_cols + [f"flag:{c}" for c in forecast_cols]
            fore = inputs[fcols].to_numpy()
            if statics_in_decoder:
                fore = np.hstack([fore, statics])
            self.basins.append(
                BasinArrays(
                    gauge_id=r.gauge_id,
                    dates=r.dates,
                    hindcast=np.ascontiguousarray(hind),
                    forecast=np.ascontiguousarray(fore),
                    target=preprocessor.standardize_target(r.discharge.to_numpy()),
                    target_allowed=_mask_for(r, target_masks),
                )
            )
        self.index = self._build_index()

    @property
    def n_hindcast_features(self):
        return self.basins[0].hindcast.shape[1] if self.basins else 0

    @property
    def n_forecast_features(self):
        return self.basins[0].forecast.shape[1] if self.basins else 0

    def _build_index(self):
        pairs = []
        th = self.hindcast_length
        for i, b in enumerate(self.basins):
            n = len(b.dates)
            if n < th + HORIZON:
                continue
            usable = ~np.isnan(b.target) & b.target_allowed
            # any usable target in t..t+7
            window = np.lib.stride_tricks.sliding_window_view(usable, HORIZON).any(axis=1)
            issue = np.arange(th, n - HORIZON + 1)
            ok = issue[window[issue]]
            pairs.append(np.column_stack([np.full(ok.size, i), ok]))
        if not pairs:
            return np.empty((0, 2), dtype=np.int64)
        return np.vstack(pairs).astype(np.int64)

    def __len__(self):
        return len(self.index)

    def batch(self, rows):
        """Arrays for the given sample rows: hindcast, forecast, target, mask."""
        th = self.hindcast_length
        xh, xf, y, m = [], [], [], []
        for bi, t in self.index[rows]:
            b = self.basins[bi]
            xh.append(b.hindcast[t - th : t])
            xf.append(b.forecast[t : t + HORIZON])
            target = b.target[t : t + HORIZON]
            mask = ~np.isnan(target) & b.target_allowed[t : t + HORIZON]
            y.append(np.where(mask, target, 0.0))
            m.append(mask)
        return np.stack(xh), np.stack(xf), np.stack(y), np.stack(m)

    def issue_inputs(self, basin_index, issue_positions):
        """Model inputs for explicit issue-day positions of one basin (no target needed)."""
        b = self.basins[basin_index]
        th = self.hindcast_length
        xh = np.stack([b.hindcast[t - th : t] for t in issue_positions])
        xf = np.stack([b.forecast[t : t + HORIZON] for t in issue_positions])
        return xh, xf


def date_mask(records, ranges):
    """Per-gauge boolean calendars that are True inside any of the ``(start, end)`` ranges."""
    masks = {}
    for r in records:
        m = np.zeros(r.n_days, dtype=bool)
        for start, end in ranges:
            m |= (r.dates >= pd.Timestamp(start)) & (r.dates <= pd.Timestamp(end))
        masks[r.gauge_id] = m
    return masks
