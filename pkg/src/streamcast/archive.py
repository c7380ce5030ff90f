"""Prediction archives: ``gauge_id,issue_date,lead_days,q_pred_mmday`` CSV files.

The native forecaster writes this schema and external benchmark models are
read through it, so every downstream step is model-agnostic.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

ARCHIVE_COLUMNS = ["gauge_id", "issue_date", "lead_days", "q_pred_mmday"]


class ArchiveFormatError(ValueError):
    pass


def validate_archive(frame: pd.DataFrame, name="archive") -> pd.DataFrame:
    missing = [c for c in ARCHIVE_COLUMNS if c not in frame.columns]
    if missing:
        raise ArchiveFormatError(f"{name}: missing columns {missing}")
    out = frame[ARCHIVE_COLUMNS].copy()
    out["gauge_id"] = out["gauge_id"].astype(str)
    issue = pd.to_datetime(out["issue_date"], format="%Y-%m-%d", errors="coerce")
    if issue.isna().any():
        row = int(np.argmax(issue.isna().to_numpy()))
        raise ArchiveFormatError(f"{name}: bad issue_date on row {row + 2}")
    out["issue_date"] = issue
    lead = pd.to_numeric(out["lead_days"], errors="coerce")
    if lead.isna().any() or (lead < 0).any() or (lead % 1 != 0).any():
        raise ArchiveFormatError(f"{name}: lead_days must be non-negative integers")
    out["lead_days"] = lead.astype(int)
    out["q_pred_mmday"] = pd.to_numeric(out["q_pred_mmday"], errors="coerce")
    if out.duplicated(["gauge_id", "issue_date", "lead_days"]).any():
        raise ArchiveFormatError(f"{name}: duplicate (gauge_id, issue_date, lead_days) rows")
    return out


def read_archive(path) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"gauge_id": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ArchiveFormatError(f"{path}: malformed CSV ({exc})") from None
    return validate_archive(frame, str(path))


def write_archive(frame: pd.DataFrame, path):
    out = frame[ARCHIVE_COLUMNS].copy()
    out["issue_date"] = pd.to_datetime(out["issue_date"]).dt.strftime("%Y-%m-%d")
    out = out.sort_values(["gauge_id", "issue_date", "lead_days"], kind="stable")
    out.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")


def hydrograph(archive: pd.DataFrame, gauge_id, lead) -> pd.Series:
    """Forecasts at one lead, indexed by the date they are valid for."""
    rows = archive[(archive["gauge_id"] == gauge_id) & (archive["lead_days"] == lead)]
    valid = pd.DatetimeIndex(rows["issue_date"]) + pd.to_timedelta(lead, unit="D")
    return pd.Series(rows["q_pred_mmday"].to_numpy(dtype=float), index=valid, name=gauge_id).sort_index()


def gauges(archive: pd.DataFrame):
    return sorted(archive["gauge_id"].unique())


def leads(archive: pd.DataFrame):
    return sorted(int(x) for x in archive["lead_days"].unique())
