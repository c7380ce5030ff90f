"""Synthetic basins driven by a soil bucket draining into a linear reservoir.

Used as test fixtures and for desk-scale end-to-end runs. Discharge responds
to precipitation on the same day, so forecast precipitation carries real
information at every lead time, and the recession rate is exposed as a
static attribute so the response is learnable in held-out basins.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .data import BasinRecord

CONTINENTS = ["africa", "asia", "europe", "north_america", "oceania", "south_america"]
CLIMATE_ZONES = [f"cz{i:02d}" for i in range(1, 14)]
TERMINAL_BASINS = [f"tb{i}" for i in range(1, 9)]

FORCING_VARIABLES = ["total_precipitation", "temperature_2m", "surface_net_solar_radiation"]


def linear_reservoir(precip, pet, recession, runoff_coefficient):
    """Daily outflow (mm/day) of a linear reservoir fed by effective rainfall.

    Effective rainfall is the runoff share of precipitation in excess of
    evaporative demand; outflow is ``recession`` times the current storage.
    """
    store = 0.0
    q = np.empty_like(precip)
    for t, (p, e) in enumerate(zip(precip, pet)):
        store += runoff_coefficient * max(p - 0.5 * e, 0.0)
        q[t] = recession * store
        store -= q[t]
    return q


def make_basin(gauge_id, rng, start="2000-01-01", n_days=1826, missing_q=0, area_error=0.0,
               hres_start_day=0, hres_noise=0.3, continent=None, climate_zone=None, terminal_basin=None):
    dates = pd.date_range(start, periods=n_days, freq="D", name="date")
    doy = dates.dayofyear.to_numpy()
    season = np.sin(2 * np.pi * (doy - 80) / 365.25)

    wet_prob = np.clip(0.3 + 0.2 * rng.uniform(-1, 1) + 0.15 * season, 0.05, 0.9)
    rain_mean = rng.uniform(4.0, 12.0)
    rain = (rng.uniform(size=n_days) < wet_prob) * rng.exponential(rain_mean, size=n_days)
    temp = 10 + 12 * season + rng.normal(0, 2, n_days)
    solar = 150 + 100 * season + rng.normal(0, 15, n_days)
    pet = np.clip(0.15 * (temp + 5) * (solar / 200), 0.0, None)

    recession = rng.uniform(0.05, 0.4)
    runoff_coefficient = rng.uniform(0.3, 0.8)
    q = linear_reservoir(rain, pet, recession, runoff_coefficient)

    era5 = pd.DataFrame(
        {"total_precipitation": rain, "temperature_2m": temp, "surface_net_solar_radiation": solar},
        index=dates,
    )
    noise = rng.normal(0, hres_noise, size=(n_days, 3))
    hres = pd.DataFrame(
        {
            "total_precipitation": np.clip(rain * np.exp(noise[:, 0]), 0, None),
            "temperature_2m": temp + noise[:, 1],
            "surface_net_solar_radiation": solar * np.exp(0.1 * noise[:, 2]),
        },
        index=dates,
    )
    hres.iloc[:hres_start_day] = np.nan

    discharge = pd.Series(q.copy(), index=dates, name="q_mmday")
    if missing_q:
        discharge.iloc[rng.choice(n_days, size=missing_q, replace=False)] = np.nan

    area = float(np.exp(rng.uniform(np.log(50), np.log(50_000))))
    attributes = pd.Series(
        {
            "area": area,
            "pet_mean": float(pet.mean() * 365.25),
            "aet_mean": float((rain.mean() - q.mean()) * 365.25),
            "elevation": float(rng.uniform(10, 3000)),
            "recession_rate": recession,
            "runoff_coefficient": runoff_coefficient,
        }
    )
    return BasinRecord(
        gauge_id=gauge_id,
        drainage_area_reported=area,
        drainage_area_polygon=area * (1 + area_error),
        continent=continent or CONTINENTS[rng.integers(len(CONTINENTS))],
        climate_zone=climate_zone or CLIMATE_ZONES[rng.integers(len(CLIMATE_ZONES))],
        terminal_basin_id=terminal_basin or TERMINAL_BASINS[rng.integers(len(TERMINAL_BASINS))],
        forcings={"era5land": era5, "hres": hres},
        discharge=discharge,
        attributes=attributes,
    )


def make_basins(n=20, n_years=5, seed=0, start="2000-01-01"):
    """``n`` synthetic basins with labels cycling through every group."""
    rng = np.random.default_rng(seed)
    n_days = int(round(n_years * 365.25))
    basins = []
    for i in range(n):
        basins.append(
            make_basin(
                f"G{i:04d}",
                rng,
                start=start,
                n_days=n_days,
                missing_q=int(rng.integers(0, 10)),
                area_error=float(rng.uniform(-0.1, 0.1)),
                hres_start_day=int(rng.integers(0, 200)),
                continent=CONTINENTS[i % len(CONTINENTS)],
                climate_zone=CLIMATE_ZONES[i % len(CLIMATE_ZONES)],
                terminal_basin=TERMINAL_BASINS[i % len(TERMINAL_BASINS)],
            )
        )
    return basins


def benchmark_archive(records, bias=1.3, noise=0.25, lag=1, seed=0, issue_dates=None):
    """A deliberately degraded reference model in the prediction-archive schema.

    Each lead's forecast is the observed hydrograph lagged by ``lag`` days,
    scaled by ``bias`` and perturbed with multiplicative noise.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for r in records:
        q = r.discharge.interpolate(limit_direction="both").to_numpy()
        sim = bias * np.roll(q, lag) * np.exp(rng.normal(0, noise, size=q.size))
        sim[:lag] = q[:lag]
        dates = r.dates if issue_dates is None else pd.DatetimeIndex(issue_dates)
        pos = r.dates.get_indexer(dates)
        for lead in range(8):
            target = pos + lead
            ok = target < len(q)
            rows.append(
                pd.DataFrame(
                    {
                        "gauge_id": r.gauge_id,
                        "issue_date": r.dates[pos[ok]].strftime("%Y-%m-%d"),
                        "lead_days": lead,
                        "q_pred_mmday": sim[target[ok]],
                    }
                )
            )
    return pd.concat(rows, ignore_index=True).sort_values(
        ["gauge_id", "issue_date", "lead_days"], kind="stable"
    ).reset_index(drop=True)
