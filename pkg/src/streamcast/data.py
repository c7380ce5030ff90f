"""Basin records on disk and in memory, plus input standardization and imputation.

A basin directory looks like::

    <gauge_id>/
        forcings_<source>.csv   date,var1,var2,...
        discharge.csv           date,q_mmday
        attributes.json         {"area": 812.0, "pet_mean": 1040.0, ...}
        meta.json               areas, continent, climate_zone, terminal_basin_id

Missing values are empty CSV fields (or JSON ``null``). Every series of a
loaded record is reindexed onto one contiguous daily calendar with NaN as the
missing marker.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

DISCHARGE_FILE = "discharge.csv"
ATTRIBUTES_FILE = "attributes.json"
META_FILE = "meta.json"
FORCING_PREFIX = "forcings_"

#: Forecast-source variables and the reanalysis variables that may stand in for them.
DEFAULT_SUBSTITUTES = {
    "hres:total_precipitation": ["era5land:total_precipitation"],
    "hres:temperature_2m": ["era5land:temperature_2m"],
    "hres:surface_net_solar_radiation": ["era5land:surface_net_solar_radiation"],
    "hres:surface_net_thermal_radiation": ["era5land:surface_net_thermal_radiation"],
    "hres:snowfall": ["era5land:snowfall"],
    "hres:surface_pressure": ["era5land:surface_pressure"],
}


class BasinFormatError(ValueError):
    """A basin file does not conform to the directory layout."""

    def __init__(self, path, message, line=None):
        self.path = Path(path)
        self.line = line
        where = f"{self.path}" + (f", line {line}" if line is not None else "")
        super().__init__(f"{where}: {message}")


class ImputationError(ValueError):
    """A variable has no value in any source for an entire record."""

    def __init__(self, gauge_id, columns):
        self.gauge_id = gauge_id
        self.columns = list(columns)
        super().__init__(
            f"gauge {gauge_id}: no data in any source for {', '.join(self.columns)}"
        )


@dataclass(frozen=True, eq=False)
class BasinRecord:
    """One gauge and everything known about its watershed.

    ``forcings`` maps a source name to a date-indexed frame of variables;
    ``discharge`` is area-normalized flow in mm/day; ``attributes`` holds the
    static catchment descriptors (NaN where unknown).
    """

    gauge_id: str
    drainage_area_reported: float
    drainage_area_polygon: float
    continent: str
    climate_zone: str
    terminal_basin_id: str
    forcings: dict
    discharge: pd.Series
    attributes: pd.Series
    extra_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("drainage_area_reported", "drainage_area_polygon"):
            area = getattr(self, name)
            if not (area > 0 and math.isfinite(area)):
                raise ValueError(f"gauge {self.gauge_id}: {name} must be positive, got {area}")
        q = self.discharge.to_numpy(dtype=float)
        if np.any(q[~np.isnan(q)] < 0):
            raise ValueError(f"gauge {self.gauge_id}: negative discharge")
        for source, frame in self.forcings.items():
            if not frame.index.equals(self.discharge.index):
                raise ValueError(f"gauge {self.gauge_id}: forcings_{source} calendar differs from discharge")

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.discharge.index

    @property
    def n_days(self) -> int:
        return len(self.discharge)

    def forcing_frame(self) -> pd.DataFrame:
        """All forcings side by side with ``source:variable`` column names."""
        frames = []
        for source in sorted(self.forcings):
            frame = self.forcings[source]
            frames.append(frame.add_prefix(f"{source}:"))
        if not frames:
            return pd.DataFrame(index=self.dates)
        return pd.concat(frames, axis=1)

    def slice_dates(self, start=None, end=None) -> "BasinRecord":
        sel = slice(start, end)
        return replace(
            self,
            forcings={k: v.loc[sel] for k, v in self.forcings.items()},
            discharge=self.discharge.loc[sel],
        )


# --------------------------------------------------------------------------
# reading and writing


def _read_dated_csv(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise BasinFormatError(path, f"malformed CSV ({exc})") from None
    if not len(frame.columns) or frame.columns[0] != "date":
        raise BasinFormatError(path, "first column must be 'date'", line=1)
    dates = pd.to_datetime(frame["date"], format="%Y-%m-%d", errors="coerce")
    bad = dates.isna().to_numpy()
    if bad.any():
        row = int(np.argmax(bad))
        raise BasinFormatError(path, f"unparseable date {frame['date'].iloc[row]!r}", line=row + 2)
    diffs = dates.diff().dt.days.to_numpy()[1:]
    if np.any(diffs == 0):
        row = int(np.argmax(diffs == 0)) + 1
        raise BasinFormatError(path, f"duplicate date {frame['date'].iloc[row]}", line=row + 2)
    if np.any(diffs < 0):
        row = int(np.argmax(diffs < 0)) + 1
        raise BasinFormatError(path, f"non-monotone date {frame['date'].iloc[row]}", line=row + 2)

    values = {}
    for col in frame.columns[1:]:
        raw = frame[col].str.strip()
        num = pd.to_numeric(raw.replace("", np.nan), errors="coerce")
        bad = num.isna() & (raw != "")
        if bad.any():
            row = int(np.argmax(bad.to_numpy()))
            raise BasinFormatError(path, f"non-numeric value {raw.iloc[row]!r} in column {col!r}", line=row + 2)
        values[col] = num.to_numpy(dtype=float)
    out = pd.DataFrame(values, index=pd.DatetimeIndex(dates, name="date"))
    return out


def _read_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise BasinFormatError(path, f"malformed JSON ({exc.msg})", line=exc.lineno) from None


def load_basin(path, sources=None) -> BasinRecord:
    """Read one basin directory.

    Parameters
    ----------
    path : path-like
        Directory named after the gauge.
    sources : dict of {str: list of str}, optional
        Expected forcing sources and their variables. Defaults to the
        ``sources`` entry of ``meta.json`` and otherwise to whatever
        ``forcings_*.csv`` files exist. A declared source whose file is absent
        is loaded as all-missing.
    """
    path = Path(path)
    if not path.is_dir():
        raise BasinFormatError(path, "not a basin directory")
    meta = _read_json(path / META_FILE)
    attrs = _read_json(path / ATTRIBUTES_FILE) if (path / ATTRIBUTES_FILE).exists() else {}
    discharge = _read_dated_csv(path / DISCHARGE_FILE)
    if "q_mmday" not in discharge.columns:
        raise BasinFormatError(path / DISCHARGE_FILE, "missing column 'q_mmday'", line=1)

    if sources is None:
        sources = meta.get("sources")
    found = {
        p.name[len(FORCING_PREFIX) : -len(".csv")]: p
        for p in sorted(path.glob(f"{FORCING_PREFIX}*.csv"))
    }
    if sources is None:
        sources = {name: None for name in found}

    raw_forcings = {name: _read_dated_csv(found[name]) for name in sources if name in found}
    start = min([discharge.index[0]] + [f.index[0] for f in raw_forcings.values() if len(f)])
    end = max([discharge.index[-1]] + [f.index[-1] for f in raw_forcings.values() if len(f)])
    calendar = pd.date_range(start, end, freq="D", name="date")

    forcings = {}
    for name, variables in sources.items():
        if name in raw_forcings:
            frame = raw_forcings[name].reindex(calendar)
            if variables is not None:
                frame = frame.reindex(columns=list(variables))
        else:
            if variables is None:
                raise BasinFormatError(path, f"source {name!r} absent and its variables are undeclared")
            frame = pd.DataFrame(np.nan, index=calendar, columns=list(variables))
        forcings[name] = frame

    gauge_id = str(meta.get("gauge_id", path.name))
    attributes = pd.Series(
        {k: (np.nan if v is None else float(v)) for k, v in attrs.items()}, dtype=float
    )
    known = {
        "gauge_id",
        "drainage_area_reported",
        "drainage_area_polygon",
        "continent",
        "climate_zone",
        "terminal_basin_id",
        "sources",
    }
    try:
        return BasinRecord(
            gauge_id=gauge_id,
            drainage_area_reported=float(meta["drainage_area_reported"]),
            drainage_area_polygon=float(meta["drainage_area_polygon"]),
            continent=str(meta.get("continent", "")),
            climate_zone=str(meta.get("climate_zone", "")),
            terminal_basin_id=str(meta.get("terminal_basin_id", "")),
            forcings=forcings,
            discharge=discharge["q_mmday"].reindex(calendar),
            attributes=attributes,
            extra_meta={k: v for k, v in meta.items() if k not in known},
        )
    except KeyError as exc:
        raise BasinFormatError(path / META_FILE, f"missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise BasinFormatError(path, str(exc)) from None


def _write_dated_csv(frame: pd.DataFrame, path: Path):
    out = frame.copy()
    out.index = out.index.strftime("%Y-%m-%d")
    out.index.name = "date"
    out.to_csv(path, na_rep="", float_format="%.10g", lineterminator="\n")


def write_basin(record: BasinRecord, root) -> Path:
    """Write ``record`` to ``root/<gauge_id>/`` in the layout read by :func:`load_basin`."""
    path = Path(root) / record.gauge_id
    path.mkdir(parents=True, exist_ok=True)
    for source, frame in record.forcings.items():
        _write_dated_csv(frame, path / f"{FORCING_PREFIX}{source}.csv")
    _write_dated_csv(record.discharge.rename("q_mmday").to_frame(), path / DISCHARGE_FILE)
    attrs = {k: (None if np.isnan(v) else float(v)) for k, v in record.attributes.items()}
    meta = {
        "gauge_id": record.gauge_id,
        "drainage_area_reported": record.drainage_area_reported,
        "drainage_area_polygon": record.drainage_area_polygon,
        "continent": record.continent,
        "climate_zone": record.climate_zone,
        "terminal_basin_id": record.terminal_basin_id,
        "sources": {k: list(v.columns) for k, v in record.forcings.items()},
        **record.extra_meta,
    }
    with open(path / ATTRIBUTES_FILE, "w") as fh:
        json.dump(attrs, fh, indent=2)
        fh.write("\n")
    with open(path / META_FILE, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return path


def load_basins(root, gauge_ids=None, sources=None) -> list[BasinRecord]:
    root = Path(root)
    if gauge_ids is None:
        gauge_ids = sorted(p.name for p in root.iterdir() if (p / META_FILE).exists())
    return [load_basin(root / g, sources=sources) for g in gauge_ids]


# --------------------------------------------------------------------------
# quality filtering


def area_discrepancy(record: BasinRecord) -> float:
    reported = record.drainage_area_reported
    return abs(reported - record.drainage_area_polygon) / reported


def filter_gauges(records, tolerance=0.20):
    """Keep gauges whose polygon area is within ``tolerance`` of the reported area.

    The boundary is inclusive: a discrepancy of exactly ``tolerance`` is kept.
    """
    if not 0 < tolerance < 1:
        raise ValueError(f"tolerance must lie in (0, 1), got {tolerance}")
    # absorb representation error at the inclusive boundary
    return [r for r in records if area_discrepancy(r) <= tolerance + 1e-12]


# --------------------------------------------------------------------------
# standardization


class FeatureStandardizer(TransformerMixin, BaseEstimator):
    """Per-column z-scoring with statistics from training data only.

    NaNs are ignored when fitting and passed through by :meth:`transform`.
    Columns with zero variance cannot be standardized and are dropped (with a
    warning); their names are kept in ``dropped_features_``.

    Parameters
    ----------
    min_std : float
        Columns whose standard deviation does not exceed this are dropped.
    """

    def __init__(self, min_std=0.0):
        self.min_std = min_std

    def fit(self, X, y=None):
        X = _as_frame(X)
        values = X.to_numpy(dtype=float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean = np.nanmean(values, axis=0)
            std = np.nanstd(values, axis=0)
        keep = np.isfinite(std) & (std > self.min_std)
        self.feature_names_in_ = np.asarray(X.columns, dtype=object)
        self.dropped_features_ = list(X.columns[~keep])
        if self.dropped_features_:
            warnings.warn(
                f"dropping zero-variance features: {', '.join(map(str, self.dropped_features_))}",
                stacklevel=2,
            )
        self.feature_names_out_ = np.asarray(X.columns[keep], dtype=object)
        self.mean_ = mean[keep]
        self.scale_ = std[keep]
        self.n_features_in_ = X.shape[1]
        return self

    def _select(self, X):
        X = _as_frame(X, self.feature_names_in_)
        missing = [c for c in self.feature_names_out_ if c not in X.columns]
        if missing:
            raise ValueError(f"columns missing at transform time: {missing}")
        return X[list(self.feature_names_out_)]

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = self._select(X)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        X = _as_frame(X, self.feature_names_out_)
        return X * self.scale_ + self.mean_

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "mean_")
        return self.feature_names_out_.copy()


def _as_frame(X, columns=None) -> pd.DataFrame:
    if isinstance(X, pd.DataFrame):
        return X
    if isinstance(X, pd.Series):
        return X.to_frame()
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if columns is None or len(columns) != arr.shape[1]:
        columns = [f"x{i}" for i in range(arr.shape[1])]
    return pd.DataFrame(arr, columns=list(columns))


def fit_transform(records, start=None, end=None, min_std=0.0) -> FeatureStandardizer:
    """Fit a forcing standardizer on the ``[start, end]`` period of ``records``."""
    frames = [r.forcing_frame().loc[start:end] for r in records]
    return FeatureStandardizer(min_std=min_std).fit(pd.concat(frames, axis=0))


# --------------------------------------------------------------------------
# imputation


@dataclass(frozen=True)
class ImputationRecord:
    """Which cells were filled, and how.

    ``flags`` holds 1 where a value was imputed; ``method`` holds ``""``,
    ``"substitute:<column>"`` or ``"mean"`` per cell.
    """

    gauge_id: str
    flags: pd.DataFrame
    method: pd.DataFrame

    @property
    def n_imputed(self) -> int:
        return int(self.flags.to_numpy().sum())


def flag_name(column: str) -> str:
    return f"flag:{column}"


def impute(record: BasinRecord, transform: FeatureStandardizer, substitutes=None):
    """Dense standardized inputs for ``record`` with imputation flags appended.

    Missing forcing cells are first filled from substitute columns measuring
    the same quantity (tried in order), then with the training mean, which is
    zero after standardization. Every filled cell is flagged.

    Returns
    -------
    inputs : DataFrame
        Standardized features followed by one ``flag:<feature>`` column each.
    record : ImputationRecord
    """
    if substitutes is None:
        substitutes = DEFAULT_SUBSTITUTES
    full = record.forcing_frame()
    columns = list(transform.get_feature_names_out())
    raw = full.reindex(columns=columns)
    missing = raw.isna()
    method = pd.DataFrame("", index=raw.index, columns=columns)
    filled = raw.copy()

    for col in columns:
        for sub in substitutes.get(col, ()):
            if sub not in full.columns:
                continue
            take = filled[col].isna() & full[sub].notna()
            if take.any():
                filled.loc[take, col] = full.loc[take, sub]
                method.loc[take, col] = f"substitute:{sub}"

    empty = [c for c in columns if filled[c].isna().all()]
    if empty:
        raise ImputationError(record.gauge_id, empty)

    standardized = transform.transform(filled)
    still = standardized.isna()
    method = method.mask(still, "mean")
    standardized = standardized.fillna(0.0)
    flags = missing.astype(np.int8)
    flags.columns = [flag_name(c) for c in columns]
    inputs = pd.concat([standardized, flags.astype(float)], axis=1)
    return inputs, ImputationRecord(record.gauge_id, flags, method)
