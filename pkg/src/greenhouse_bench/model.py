"""Reduced-order greenhouse process model.

Typed state/control/disturbance/parameter containers, the continuous-time
dynamics x' = F(x, u, d, p), psychrometric conversions and the observation
map.  All rates are per second; the integrator discretizes them with a
zero-order hold on controls and weather.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import ConfigError

# Physical constants.
R_GAS = _kernels.R_GAS            # [J mol-1 K-1]
M_CO2_MG = _kernels.M_CO2_MG      # [mg mol-1]
P_ATM = _kernels.P_ATM            # [Pa]
RHO_CP = _kernels.RHO_CP          # [J m-3 K-1]
KELVIN = _kernels.KELVIN
SECONDS_PER_DAY = _kernels.SECONDS_PER_DAY

STATE_FIELDS = (
    "t_air",
    "t_pipe",
    "co2_air",
    "vp_air",
    "t_can24",
    "t_can_sum",
    "w_fruit",
    "w_harvest",
)
CONTROL_FIELDS = ("u_boil", "u_co2", "u_thscr", "u_vent", "u_lamp", "u_blscr")
DISTURBANCE_FIELDS = ("i_glob", "t_out", "rh_out", "co2_out", "wind")

# Actuator bounds: boiler W/m2, CO2 injection mg/m2/s, screens and vents as
# fractions, lamp electrical input W/m2.
U_MIN = np.zeros(6)
U_MAX = np.array([130.0, 5.0, 1.0, 1.0, 116.0, 1.0])

# Reference peak global radiation used for reward scaling [W m-2].
I_GLOB_MAX = 1000.0

# name, default, unit, description. Order must match the kernel layout.
PARAM_TABLE = (
    ("c_air", 30_000.0, "J m-2 K-1", "effective heat capacity of the indoor air node"),
    ("c_pipe", 10_000.0, "J m-2 K-1", "heat capacity of the heating pipe rail"),
    ("eta_glob", 0.5, "-", "fraction of global radiation heating the air"),
    ("k_pipe", 5.0, "W m-2 K-1", "pipe to air heat transfer coefficient"),
    ("eta_lamp_heat", 0.7, "-", "fraction of lamp electrical input released as heat"),
    ("u_cov", 6.0, "W m-2 K-1", "cover heat loss coefficient with screens open"),
    ("rho_scr", 0.7, "-", "cover loss reduction of a fully closed thermal screen"),
    ("h_air", 4.0, "m", "mean air volume per m2 of floor"),
    ("l_leak", 1e-4, "m s-1", "leakage air exchange rate"),
    ("l_vent", 5e-3, "m s-1", "maximum roof ventilation exchange rate"),
    ("c_wind", 0.1, "s m-1", "wind speed enhancement of ventilation"),
    ("m_co2_conv", 1.5, "mg mg-1", "CO2 consumed per mg of assimilate formed"),
    ("c_vp", 1.0, "m", "effective vapor capacity of the air column"),
    ("c_trans", 0.03, "Pa m s-1 per W m-2", "canopy transpiration response to absorbed light"),
    ("k_cond", 5e-4, "m s-1", "condensation conductance above outdoor saturation"),
    ("eps_light", 0.06, "mg J-1", "light use efficiency of assimilation"),
    ("eta_par_sun", 0.45, "-", "photosynthetic fraction of global radiation"),
    ("eta_par_lamp", 0.35, "-", "photosynthetic fraction of lamp input"),
    ("k_co2", 600.0, "ppm", "CO2 half saturation of assimilation"),
    ("t_opt", 22.0, "degC", "assimilation temperature optimum"),
    ("t_width", 12.0, "degC", "half width of the temperature response"),
    ("c_ab", 0.5, "-", "assimilate fraction partitioned to fruit"),
    ("m_resp", 1e-7, "s-1", "fruit maintenance respiration rate at 25 degC"),
    ("q10", 2.0, "-", "respiration temperature sensitivity per 10 degC"),
    ("tau_24", 86_400.0, "s", "canopy 24 h temperature low-pass time constant"),
    ("s_start", 30.0, "degC day", "temperature sum at which fruit set begins"),
    ("s_harvest", 250.0, "degC day", "temperature sum at which harvest begins"),
    ("h_rate", 5e-7, "s-1", "harvest outflow rate of ripe fruit"),
)

PARAM_NAMES: Tuple[str, ...] = tuple(row[0] for row in PARAM_TABLE)
PARAM_DEFAULTS: Dict[str, float] = {row[0]: row[1] for row in PARAM_TABLE}
PARAM_UNITS: Dict[str, str] = {row[0]: row[2] for row in PARAM_TABLE}

assert PARAM_NAMES == _kernels.PARAM_ORDER, "parameter table out of sync with kernels"

# Crop-side parameters randomized by default under parametric uncertainty.
CROP_PARAMS = (
    "eps_light",
    "k_co2",
    "t_opt",
    "t_width",
    "c_ab",
    "m_resp",
    "q10",
    "s_start",
    "s_harvest",
    "h_rate",
    "m_co2_conv",
    "c_trans",
)


def _require_finite(name: str, value: float) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


@dataclass(frozen=True)
class StateVector:
    t_air: float       # [degC] indoor air temperature
    t_pipe: float      # [degC] heating pipe temperature
    co2_air: float     # [mg m-3] indoor CO2 concentration
    vp_air: float      # [Pa] indoor vapor pressure
    t_can24: float     # [degC] 24 h low-pass canopy temperature
    t_can_sum: float   # [degC day] accumulated development temperature
    w_fruit: float     # [kg m-2] fruit dry weight on the plant
    w_harvest: float   # [kg m-2] cumulative harvested dry weight

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.t_air,
                self.t_pipe,
                self.co2_air,
                self.vp_air,
                self.t_can24,
                self.t_can_sum,
                self.w_fruit,
                self.w_harvest,
            ]
        )

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "StateVector":
        a = np.asarray(a, dtype=float)
        if a.shape != (len(STATE_FIELDS),):
            raise ValueError(f"state array must have shape (8,), got {a.shape}")
        return cls(*(float(v) for v in a))

    def replace(self, **kwargs: float) -> "StateVector":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class ControlVector:
    u_boil: float   # [W m-2] boiler heat input
    u_co2: float    # [mg m-2 s-1] CO2 injection
    u_thscr: float  # [0..1] thermal screen closure
    u_vent: float   # [0..1] roof vent aperture
    u_lamp: float   # [W m-2] lamp electrical input
    u_blscr: float  # [0..1] blackout screen closure

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.u_boil, self.u_co2, self.u_thscr, self.u_vent, self.u_lamp, self.u_blscr]
        )

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "ControlVector":
        a = np.asarray(a, dtype=float)
        if a.shape != (len(CONTROL_FIELDS),):
            raise ValueError(f"control array must have shape (6,), got {a.shape}")
        return cls(*(float(v) for v in a))


@dataclass(frozen=True)
class DisturbanceVector:
    i_glob: float   # [W m-2] outdoor global radiation
    t_out: float    # [degC] outdoor temperature
    rh_out: float   # [%] outdoor relative humidity
    co2_out: float  # [ppm] outdoor CO2
    wind: float     # [m s-1] wind speed

    def as_array(self) -> np.ndarray:
        return np.array([self.i_glob, self.t_out, self.rh_out, self.co2_out, self.wind])

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "DisturbanceVector":
        a = np.asarray(a, dtype=float)
        if a.shape != (len(DISTURBANCE_FIELDS),):
            raise ValueError(f"disturbance array must have shape (5,), got {a.shape}")
        return cls(*(float(v) for v in a))


@dataclass(frozen=True)
class SimClock:
    """Wall-clock position of a simulation step (UTC)."""

    hour: float         # [h] fractional hour of day, 0 <= hour < 24
    day_of_year: float  # [day] fractional day of year, 0-based

    def __post_init__(self) -> None:
        if not 0.0 <= self.hour < 24.0:
            raise ValueError(f"hour must be in [0, 24), got {self.hour}")


@dataclass(frozen=True)
class ParameterSet:
    """Full named parameter map plus its uncertainty declaration.

    ``values`` always covers every model parameter; ``randomized_names``
    lists the subset subject to multiplicative randomization with relative
    half-width ``delta``.
    """

    values: Mapping[str, float]
    randomized_names: Tuple[str, ...] = CROP_PARAMS
    delta: float = 0.0

    def __post_init__(self) -> None:
        missing = set(PARAM_NAMES) - set(self.values)
        unknown = set(self.values) - set(PARAM_NAMES)
        if missing:
            raise ConfigError(f"parameter set missing names: {sorted(missing)}")
        if unknown:
            raise ConfigError(f"unknown parameter names: {sorted(unknown)}")
        for name, v in self.values.items():
            if not math.isfinite(float(v)):
                raise ConfigError(f"parameter {name} must be finite, got {v!r}")
            if float(v) < 0.0:
                raise ConfigError(f"parameter {name} must be non-negative, got {v}")
        for name in ("c_air", "c_pipe", "h_air", "c_vp", "tau_24", "t_width"):
            if float(self.values[name]) <= 0.0:
                raise ConfigError(f"parameter {name} must be positive, got {self.values[name]}")
        bad = set(self.randomized_names) - set(PARAM_NAMES)
        if bad:
            raise ConfigError(f"unknown randomized parameter names: {sorted(bad)}")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError(f"delta must be in [0, 1), got {self.delta}")
        object.__setattr__(self, "values", dict(self.values))
        object.__setattr__(self, "randomized_names", tuple(self.randomized_names))

    @classmethod
    def nominal(
        cls,
        delta: float = 0.0,
        randomized_names: Sequence[str] = CROP_PARAMS,
        overrides: Mapping[str, float] | None = None,
    ) -> "ParameterSet":
        values = dict(PARAM_DEFAULTS)
        if overrides:
            unknown = set(overrides) - set(PARAM_NAMES)
            if unknown:
                raise ConfigError(f"unknown parameter names: {sorted(unknown)}")
            values.update({k: float(v) for k, v in overrides.items()})
        return cls(values=values, randomized_names=tuple(randomized_names), delta=delta)

    def as_array(self) -> np.ndarray:
        return np.array([float(self.values[n]) for n in PARAM_NAMES])

    def with_values(self, values: Mapping[str, float]) -> "ParameterSet":
        return ParameterSet(values=values, randomized_names=self.randomized_names, delta=self.delta)


def vpsat(t_c: float) -> float:
    """Saturation vapor pressure over water [Pa], Magnus form."""
    t_c = _require_finite("temperature", t_c)
    if t_c <= -237.3:
        raise ValueError(f"temperature out of range for saturation pressure: {t_c}")
    return 610.78 * math.exp(17.27 * t_c / (t_c + 237.3))


def relative_humidity(vp_air: float, t_air: float) -> float:
    """Relative humidity [%] of air at vapor pressure ``vp_air`` [Pa]."""
    vp_air = _require_finite("vp_air", vp_air)
    if vp_air < 0.0:
        raise ValueError(f"vp_air must be non-negative, got {vp_air}")
    return 100.0 * vp_air / vpsat(t_air)


def co2_mgm3_to_ppm(c_mg: float, t_air: float) -> float:
    """Convert a CO2 mass concentration [mg m-3] to a mole fraction [ppm]."""
    c_mg = _require_finite("co2 concentration", c_mg)
    t_air = _require_finite("temperature", t_air)
    if c_mg < 0.0:
        raise ValueError(f"co2 concentration must be non-negative, got {c_mg}")
    if t_air + KELVIN <= 0.0:
        raise ValueError(f"temperature below absolute zero: {t_air}")
    return c_mg / M_CO2_MG / (P_ATM / (R_GAS * (t_air + KELVIN))) * 1e6


def co2_ppm_to_mgm3(ppm: float, t_air: float) -> float:
    """Convert a CO2 mole fraction [ppm] to a mass concentration [mg m-3]."""
    ppm = _require_finite("co2 mole fraction", ppm)
    t_air = _require_finite("temperature", t_air)
    if ppm < 0.0:
        raise ValueError(f"co2 mole fraction must be non-negative, got {ppm}")
    if t_air + KELVIN <= 0.0:
        raise ValueError(f"temperature below absolute zero: {t_air}")
    return ppm * 1e-6 * (P_ATM / (R_GAS * (t_air + KELVIN))) * M_CO2_MG


def clamp_controls(u: Sequence[float]) -> ControlVector:
    """Project a raw actuator request onto the admissible box."""
    a = np.asarray(u, dtype=float)
    if a.shape != (len(CONTROL_FIELDS),):
        raise ValueError(f"control array must have shape (6,), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"control vector must be finite, got {a!r}")
    return ControlVector.from_array(np.clip(a, U_MIN, U_MAX))


def derivative(
    x: StateVector, u: ControlVector, d: DisturbanceVector, p: ParameterSet
) -> StateVector:
    """Continuous-time state rates [unit of state per second]."""
    out = np.empty(_kernels.N_STATES)
    _kernels.derivative(x.as_array(), u.as_array(), d.as_array(), p.as_array(), out)
    if not np.all(np.isfinite(out)):
        bad = [STATE_FIELDS[i] for i in np.flatnonzero(~np.isfinite(out))]
        raise ValueError(f"non-finite rate for state fields {bad} at x={x}")
    return StateVector.from_array(out)


OBSERVATION_GROUPS = ("state", "time", "control", "weather", "forecast")

# Observed indoor quantities, in order.
STATE_OBS_LABELS = ("t_air", "co2_ppm", "rh", "t_pipe", "w_fruit", "t_can24", "t_can_sum")
TIME_OBS_LABELS = ("hour_sin", "hour_cos", "day_sin", "day_cos")
WEATHER_OBS_LABELS = DISTURBANCE_FIELDS

# Per-label affine normalization (center, scale) used by policies; chosen so
# typical operating ranges map roughly onto [-1, 1].
_BASE_NORMALIZATION: Dict[str, Tuple[float, float]] = {
    "t_air": (20.0, 10.0),
    "co2_ppm": (800.0, 600.0),
    "rh": (70.0, 30.0),
    "t_pipe": (30.0, 25.0),
    "w_fruit": (0.15, 0.15),
    "t_can24": (20.0, 10.0),
    "t_can_sum": (150.0, 150.0),
    "hour_sin": (0.0, 1.0),
    "hour_cos": (0.0, 1.0),
    "day_sin": (0.0, 1.0),
    "day_cos": (0.0, 1.0),
    "u_boil": (65.0, 65.0),
    "u_co2": (2.5, 2.5),
    "u_thscr": (0.5, 0.5),
    "u_vent": (0.5, 0.5),
    "u_lamp": (58.0, 58.0),
    "u_blscr": (0.5, 0.5),
    "i_glob": (250.0, 250.0),
    "t_out": (10.0, 10.0),
    "rh_out": (70.0, 30.0),
    "co2_out": (420.0, 100.0),
    "wind": (3.0, 3.0),
}


@dataclass(frozen=True)
class ObservationConfig:
    """Which observation groups are exposed, and how much forecast."""

    groups: Tuple[str, ...] = ("state", "time", "control", "weather")
    forecast_steps: int = 0

    def __post_init__(self) -> None:
        if not self.groups:
            raise ConfigError("observation groups must be non-empty")
        unknown = set(self.groups) - set(OBSERVATION_GROUPS)
        if unknown:
            raise ConfigError(f"unknown observation groups: {sorted(unknown)}")
        if len(set(self.groups)) != len(self.groups):
            raise ConfigError(f"duplicate observation groups: {self.groups}")
        if self.forecast_steps < 0:
            raise ConfigError(f"forecast_steps must be >= 0, got {self.forecast_steps}")
        if "forecast" in self.groups and self.forecast_steps == 0:
            raise ConfigError("forecast group enabled but forecast_steps is 0")
        if "forecast" not in self.groups and self.forecast_steps > 0:
            raise ConfigError("forecast_steps > 0 without the forecast group")
        object.__setattr__(self, "groups", tuple(self.groups))

    def labels(self) -> Tuple[str, ...]:
        out: list[str] = []
        for g in self.groups:
            if g == "state":
                out.extend(STATE_OBS_LABELS)
            elif g == "time":
                out.extend(TIME_OBS_LABELS)
            elif g == "control":
                out.extend(CONTROL_FIELDS)
            elif g == "weather":
                out.extend(WEATHER_OBS_LABELS)
            elif g == "forecast":
                for h in range(1, self.forecast_steps + 1):
                    out.extend(f"fc{h}_{n}" for n in WEATHER_OBS_LABELS)
        return tuple(out)

    def length(self) -> int:
        return len(self.labels())

    def fingerprint(self) -> str:
        """Stable identifier for the observation layout."""
        return hashlib.sha256(",".join(self.labels()).encode()).hexdigest()[:16]


def observation_normalization(labels: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    """(center, scale) arrays for a label sequence; forecast labels reuse
    the underlying weather entry."""
    center = np.empty(len(labels))
    scale = np.empty(len(labels))
    for i, lab in enumerate(labels):
        key = lab.split("_", 1)[1] if lab.startswith("fc") and "_" in lab else lab
        if key not in _BASE_NORMALIZATION:
            raise KeyError(f"no normalization entry for observation label {lab!r}")
        center[i], scale[i] = _BASE_NORMALIZATION[key]
    return center, scale


def observe(
    x: StateVector,
    u: ControlVector,
    d: DisturbanceVector,
    p: ParameterSet,
    clock: SimClock,
    config: ObservationConfig,
    forecast_rows: Sequence[DisturbanceVector] = (),
) -> np.ndarray:
    """Flat observation vector in the order declared by ``config``.

    Pure: no randomness, identical inputs give identical outputs.
    ``forecast_rows`` must supply exactly ``forecast_steps`` rows when the
    forecast group is enabled.
    """
    parts: list[float] = []
    for g in config.groups:
        if g == "state":
            parts.extend(
                (
                    x.t_air,
                    co2_mgm3_to_ppm(x.co2_air, x.t_air),
                    relative_humidity(x.vp_air, x.t_air),
                    x.t_pipe,
                    x.w_fruit,
                    x.t_can24,
                    x.t_can_sum,
                )
            )
        elif g == "time":
            ha = 2.0 * math.pi * clock.hour / 24.0
            da = 2.0 * math.pi * clock.day_of_year / 365.25
            parts.extend((math.sin(ha), math.cos(ha), math.sin(da), math.cos(da)))
        elif g == "control":
            parts.extend(u.as_array().tolist())
        elif g == "weather":
            parts.extend(d.as_array().tolist())
        elif g == "forecast":
            if len(forecast_rows) != config.forecast_steps:
                raise ValueError(
                    f"expected {config.forecast_steps} forecast rows, got {len(forecast_rows)}"
                )
            for row in forecast_rows:
                parts.extend(row.as_array().tolist())
    return np.array(parts)
