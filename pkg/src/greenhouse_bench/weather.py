"""Weather series handling: CSV I/O, validation, resampling, synthesis.

A series is a uniformly spaced table of outdoor conditions starting at a
UTC timestamp.  Columns, in order: i_glob [W m-2], t_out [degC],
rh_out [%], co2_out [ppm], wind [m s-1].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import WeatherError
from .model import DISTURBANCE_FIELDS, DisturbanceVector, SimClock

CSV_COLUMNS = ("time",) + DISTURBANCE_FIELDS
_SECONDS_PER_DAY = 86_400.0


def _check_rows(data: np.ndarray) -> None:
    if data.ndim != 2 or data.shape[1] != len(DISTURBANCE_FIELDS):
        raise WeatherError(f"weather data must have shape (n, 5), got {data.shape}")
    if data.shape[0] < 1:
        raise WeatherError("weather series must contain at least one row")
    for j, row in enumerate(data):
        rownum = j + 1  # 1-based data row for messages
        i_glob, t_out, rh_out, co2_out, wind = row
        if not np.all(np.isfinite(row)):
            raise WeatherError(f"non-finite weather value at data row {rownum}: {row.tolist()}")
        if i_glob < 0.0:
            raise WeatherError(f"i_glob must be >= 0 at data row {rownum}: {i_glob}")
        if not 0.0 <= rh_out <= 100.0:
            raise WeatherError(f"rh_out out of range [0, 100] at data row {rownum}: {rh_out}")
        if co2_out <= 0.0:
            raise WeatherError(f"co2_out must be > 0 at data row {rownum}: {co2_out}")
        if wind < 0.0:
            raise WeatherError(f"wind must be >= 0 at data row {rownum}: {wind}")
        if t_out <= -90.0:
            raise WeatherError(f"t_out implausibly low at data row {rownum}: {t_out}")


@dataclass(frozen=True)
class WeatherSeries:
    """Uniformly spaced outdoor conditions; immutable after construction."""

    start: datetime      # UTC, stored naive
    dt: float            # [s] row spacing
    data: np.ndarray     # shape (n, 5), column order DISTURBANCE_FIELDS

    def __post_init__(self) -> None:
        if self.start.tzinfo is not None:
            start = self.start.astimezone(timezone.utc).replace(tzinfo=None)
            object.__setattr__(self, "start", start)
        if not math.isfinite(self.dt) or self.dt <= 0.0:
            raise WeatherError(f"dt must be positive and finite, got {self.dt}")
        data = np.array(self.data, dtype=float)
        _check_rows(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __len__(self) -> int:
        return self.data.shape[0]

    def time_at(self, k: int) -> datetime:
        return self.start + timedelta(seconds=k * self.dt)

    def row(self, k: int) -> DisturbanceVector:
        if not 0 <= k < len(self):
            raise WeatherError(f"row index {k} out of range for series of length {len(self)}")
        return DisturbanceVector.from_array(self.data[k])

    def clock_at(self, k: int) -> SimClock:
        t = self.time_at(k)
        hour = t.hour + t.minute / 60.0 + t.second / 3600.0 + t.microsecond / 3.6e9
        day = (t.timetuple().tm_yday - 1) + hour / 24.0
        return SimClock(hour=hour, day_of_year=day)

    @property
    def days(self) -> float:
        return len(self) * self.dt / _SECONDS_PER_DAY


def _parse_time(text: str, rownum: int) -> datetime:
    try:
        t = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except ValueError as e:
        raise WeatherError(f"bad timestamp at data row {rownum}: {text!r} ({e})") from None
    if t.tzinfo is not None:
        t = t.astimezone(timezone.utc).replace(tzinfo=None)
    return t


def load_csv(path: str | Path) -> WeatherSeries:
    """Read and fully validate a weather CSV.

    Header must be exactly ``time,iglob,tout,rhout,co2out,wind`` with
    ISO-8601 UTC timestamps at uniform spacing.  Errors cite 1-based data
    row numbers.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise WeatherError(f"{path}: empty file") from None
        expected = ["time", "iglob", "tout", "rhout", "co2out", "wind"]
        if [h.strip() for h in header] != expected:
            raise WeatherError(f"{path}: header must be {','.join(expected)!r}, got {header}")
        times: List[datetime] = []
        rows: List[List[float]] = []
        for j, rec in enumerate(reader):
            rownum = j + 1
            if len(rec) != 6:
                raise WeatherError(f"{path}: expected 6 fields at data row {rownum}, got {len(rec)}")
            times.append(_parse_time(rec[0], rownum))
            try:
                rows.append([float(v) for v in rec[1:]])
            except ValueError as e:
                raise WeatherError(f"{path}: bad numeric value at data row {rownum}: {e}") from None
    if not rows:
        raise WeatherError(f"{path}: no data rows")
    if len(times) >= 2:
        dt = (times[1] - times[0]).total_seconds()
        if dt <= 0:
            raise WeatherError(f"{path}: timestamps must increase, data row 2")
        for j in range(1, len(times)):
            got = (times[j] - times[j - 1]).total_seconds()
            if got != dt:
                raise WeatherError(
                    f"{path}: non-uniform spacing at data row {j + 1}: "
                    f"{got} s, expected {dt} s"
                )
    else:
        dt = 300.0  # single row: assume native resolution
    try:
        return WeatherSeries(start=times[0], dt=dt, data=np.array(rows))
    except WeatherError as e:
        raise WeatherError(f"{path}: {e}") from None


def save_csv(series: WeatherSeries, path: str | Path) -> None:
    """Write a series with shortest-repr floats so a reload is bit-identical."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "iglob", "tout", "rhout", "co2out", "wind"])
        for k in range(len(series)):
            t = series.time_at(k)
            writer.writerow([t.isoformat()] + [repr(float(v)) for v in series.data[k]])


def resample(series: WeatherSeries, target_dt: float) -> WeatherSeries:
    """Change row spacing by an integer factor.

    Downsampling averages complete windows (an incomplete tail is
    dropped); upsampling interpolates linearly and keeps i_glob >= 0.
    Non-integer ratios are rejected.  target_dt == dt returns the series
    unchanged.
    """
    if not math.isfinite(target_dt) or target_dt <= 0.0:
        raise WeatherError(f"target_dt must be positive and finite, got {target_dt}")
    if target_dt == series.dt:
        return series
    ratio = target_dt / series.dt
    if ratio > 1.0 and abs(ratio - round(ratio)) < 1e-9:
        r = int(round(ratio))
        n_out = len(series) // r
        if n_out < 1:
            raise WeatherError(
                f"series too short to downsample: {len(series)} rows, window {r}"
            )
        trimmed = series.data[: n_out * r]
        out = trimmed.reshape(n_out, r, trimmed.shape[1]).mean(axis=1)
        return WeatherSeries(start=series.start, dt=target_dt, data=out)
    inv = series.dt / target_dt
    if abs(inv - round(inv)) < 1e-9:
        r = int(round(inv))
        n = len(series)
        if n < 2:
            raise WeatherError("series too short to upsample: need at least 2 rows")
        n_out = (n - 1) * r + 1
        t_in = np.arange(n, dtype=float)
        t_out = np.arange(n_out, dtype=float) / r
        out = np.empty((n_out, series.data.shape[1]))
        for c in range(series.data.shape[1]):
            out[:, c] = np.interp(t_out, t_in, series.data[:, c])
        out[:, 0] = np.maximum(out[:, 0], 0.0)
        return WeatherSeries(start=series.start, dt=target_dt, data=out)
    raise WeatherError(
        f"target_dt {target_dt} is not an integer multiple or divisor of {series.dt}"
    )


@dataclass(frozen=True)
class SyntheticProfile:
    """Shape parameters for generated weather."""

    rad_peak: float = 400.0        # [W m-2] clear-sky noon radiation
    cloud_range: Tuple[float, float] = (0.55, 1.15)  # per-day radiation factor
    sunrise: float = 6.0           # [h]
    sunset: float = 18.0           # [h]
    t_mean: float = 10.0           # [degC]
    t_amp: float = 5.0             # [degC] diurnal half-amplitude, peak at 15:00
    t_jitter: float = 2.0          # [degC] per-day offset half-range
    rh_mean: float = 75.0          # [%]
    rh_amp: float = 12.0           # [%] diurnal half-amplitude, dip at 15:00
    rh_jitter: float = 2.0         # [%] per-row noise std
    wind_mean: float = 3.0         # [m s-1]
    wind_rho: float = 0.97         # AR(1) persistence
    wind_sigma: float = 0.25       # [m s-1] AR(1) innovation std
    co2_ppm: float = 410.0


PROFILES: Dict[str, SyntheticProfile] = {
    "spring": SyntheticProfile(),
    "winter": SyntheticProfile(
        rad_peak=260.0, cloud_range=(0.72, 1.1), t_mean=3.0, t_amp=4.0, rh_mean=82.0
    ),
}

_DEFAULT_START = datetime(2021, 3, 1)


def synthetic(
    seed: int,
    days: int,
    profile: SyntheticProfile | str = "spring",
    dt: float = 300.0,
    start: datetime | None = None,
) -> WeatherSeries:
    """Deterministic diurnal weather: clipped-sine radiation with per-day
    cloudiness, temperature and humidity in antiphase, AR(1) wind."""
    if days < 1:
        raise WeatherError(f"days must be >= 1, got {days}")
    if isinstance(profile, str):
        try:
            profile = PROFILES[profile]
        except KeyError:
            raise WeatherError(
                f"unknown profile {profile!r}, available: {sorted(PROFILES)}"
            ) from None
    rng = np.random.default_rng(seed)
    per_day = _SECONDS_PER_DAY / dt
    if abs(per_day - round(per_day)) > 1e-9:
        raise WeatherError(f"dt must divide one day, got {dt}")
    per_day = int(round(per_day))
    n = days * per_day

    # Fixed draw order keeps output stable across releases.
    cloud = rng.uniform(profile.cloud_range[0], profile.cloud_range[1], size=days)
    t_off = rng.uniform(-profile.t_jitter, profile.t_jitter, size=days)
    rh_noise = rng.standard_normal(n) * profile.rh_jitter
    wind_noise = rng.standard_normal(n) * profile.wind_sigma

    hour = (np.arange(n) * dt / 3600.0) % 24.0
    day_idx = (np.arange(n) * dt // _SECONDS_PER_DAY).astype(int)

    daylen = profile.sunset - profile.sunrise
    phase = np.sin(np.pi * (hour - profile.sunrise) / daylen)
    up = (hour >= profile.sunrise) & (hour < profile.sunset)
    i_glob = np.where(up, profile.rad_peak * cloud[day_idx] * np.maximum(phase, 0.0), 0.0)

    diurnal = np.sin(2.0 * np.pi * (hour - 9.0) / 24.0)  # peaks at 15:00
    t_out = profile.t_mean + t_off[day_idx] + profile.t_amp * diurnal
    rh_out = np.clip(profile.rh_mean - profile.rh_amp * diurnal + rh_noise, 5.0, 100.0)

    wind = np.empty(n)
    w = profile.wind_mean
    for k in range(n):
        w = profile.wind_mean + profile.wind_rho * (w - profile.wind_mean) + wind_noise[k]
        if w < 0.0:
            w = 0.0
        wind[k] = w

    co2 = np.full(n, profile.co2_ppm)
    data = np.column_stack([i_glob, t_out, rh_out, co2, wind])
    return WeatherSeries(start=start or _DEFAULT_START, dt=dt, data=data)


def daily_radiation_sum(series: WeatherSeries, day_index: int) -> float:
    """Radiation integral of one calendar day [MJ m-2], rectangle rule."""
    if day_index < 0:
        raise WeatherError(f"day_index must be >= 0, got {day_index}")
    midnight = series.start.replace(hour=0, minute=0, second=0, microsecond=0)
    offset = (series.start - midnight).total_seconds()
    t = offset + np.arange(len(series)) * series.dt
    mask = (t >= day_index * _SECONDS_PER_DAY) & (t < (day_index + 1) * _SECONDS_PER_DAY)
    if not np.any(mask):
        raise WeatherError(
            f"day_index {day_index} beyond series covering {series.days:.2f} days"
        )
    return float(np.sum(series.data[mask, 0]) * series.dt / 1e6)


def forecast(series: WeatherSeries, k: int, horizon: int) -> np.ndarray:
    """Rows k+1 .. k+horizon, repeating the final row past the end."""
    if horizon < 0:
        raise WeatherError(f"horizon must be >= 0, got {horizon}")
    if not 0 <= k < len(series):
        raise WeatherError(f"index {k} out of range for series of length {len(series)}")
    if horizon == 0:
        return np.empty((0, series.data.shape[1]))
    idx = np.minimum(np.arange(k + 1, k + 1 + horizon), len(series) - 1)
    return series.data[idx].copy()
