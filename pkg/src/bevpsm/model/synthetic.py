"""Synthetic hourly load, capacity-factor and inflow series.

The bundled CSV files in ``bevpsm/data`` were written by ``write_bundled_series``;
they stand in for measured weather-year data and can be replaced by any
``hour,value`` CSV of the same length.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

HOURS = 8760


def _hours(n: int = HOURS):
    t = np.arange(n)
    return t, t % 24, (t // 24) % 7, t / n


def load_series(annual_twh: float, seed: int, n: int = HOURS) -> np.ndarray:
    """Winter-peaking load with a daily double hump and lower weekends (MWh/h)."""
    rng = np.random.default_rng(seed)
    t, hod, dow, frac = _hours(n)
    seasonal = 1 + 0.12 * np.cos(2 * np.pi * frac)
    daily = 0.82 + 0.16 * np.exp(-((hod - 11.5) / 3.5) ** 2) + 0.12 * np.exp(-((hod - 19) / 2.2) ** 2)
    weekly = np.where(dow >= 5, 0.86, 1.0)
    noise = 1 + np.convolve(rng.normal(0, 0.02, n + 23), np.ones(24) / np.sqrt(24), "valid")[:n]
    shape = seasonal * daily * weekly * noise
    return shape / shape.sum() * annual_twh * 1e6


def solar_series(seed: int, latitude_scale: float = 1.0, n: int = HOURS) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t, hod, _, frac = _hours(n)
    daylen = 12 - 4 * np.cos(2 * np.pi * (frac - 0.03)) * latitude_scale
    sun = np.clip(np.cos(np.pi * (hod + 0.5 - 12.5) / daylen), 0, None)
    peak = 0.55 + 0.25 * -np.cos(2 * np.pi * (frac - 0.03))
    clouds = np.clip(rng.beta(2.2, 1.6, n // 24 + 1), 0.05, 1).repeat(24)[:n]
    return np.clip(sun * peak * clouds, 0, 1)


def wind_series(seed: int, mean: float, n: int = HOURS, persistence: float = 0.985) -> np.ndarray:
    """AR(1) wind speed with seasonal mean pushed through a cubic power curve."""
    rng = np.random.default_rng(seed)
    t, _, _, frac = _hours(n)
    z = np.empty(n)
    z[0] = 0.0
    eps = rng.normal(0, np.sqrt(1 - persistence ** 2), n)
    for k in range(1, n):
        z[k] = persistence * z[k - 1] + eps[k]
    speed = np.clip(7.0 * (1 + 0.18 * np.cos(2 * np.pi * frac)) * (1 + 0.45 * z), 0, None)
    cf = np.clip((speed ** 3 - 3 ** 3) / (12 ** 3 - 3 ** 3), 0, 1)
    cf[speed > 25] = 0
    return np.clip(cf * mean / cf.mean(), 0, 1)


def inflow_series(annual_gwh: float, seed: int, n: int = HOURS) -> np.ndarray:
    rng = np.random.default_rng(seed)
    _, _, _, frac = _hours(n)
    shape = 1 + 0.6 * np.sin(2 * np.pi * (frac - 0.15)) + rng.normal(0, 0.05, n)
    shape = np.clip(shape, 0.05, None)
    return shape / shape.sum() * annual_gwh * 1e3


def run_of_river_series(seed: int, n: int = HOURS) -> np.ndarray:
    rng = np.random.default_rng(seed)
    _, _, _, frac = _hours(n)
    return np.clip(0.5 + 0.2 * np.sin(2 * np.pi * (frac - 0.12)) + rng.normal(0, 0.02, n), 0, 1)


def bundled_series() -> dict[str, np.ndarray]:
    return {
        "load_DE": load_series(583.0, 11),
        "cf_pv_DE": solar_series(12),
        "cf_wind_onshore_DE": wind_series(13, 0.22),
        "cf_wind_offshore_DE": wind_series(14, 0.40, persistence=0.99),
        "cf_ror_DE": run_of_river_series(15),
        "inflow_reservoir_DE": inflow_series(1200.0, 16),
        "load_FR": load_series(470.0, 21),
        "cf_pv_FR": solar_series(22, latitude_scale=0.85),
        "cf_wind_onshore_FR": wind_series(23, 0.24),
    }


def write_series_csv(path, values) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("hour,value\n")
        for h, v in enumerate(values):
            fh.write(f"{h},{float(v)!r}\n")
    return path


def write_bundled_series(directory) -> list[Path]:
    d = Path(directory)
    return [write_series_csv(d / f"{name}.csv", v) for name, v in bundled_series().items()]
