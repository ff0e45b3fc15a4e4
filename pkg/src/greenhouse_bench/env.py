"""Episodic greenhouse simulation environment.

Couples the dynamics, a weather series, parametric uncertainty and the
reward stack into a seedable reset/step interface.  Episodes run a fixed
number of control intervals and end by truncation, never early.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, EpisodeError
from .integrator import IntegratorConfig, step_array
from .model import (
    CROP_PARAMS,
    ControlVector,
    DisturbanceVector,
    ObservationConfig,
    PARAM_NAMES,
    ParameterSet,
    SimClock,
    StateVector,
    U_MAX,
    U_MIN,
    co2_mgm3_to_ppm,
    co2_ppm_to_mgm3,
    observe,
    relative_humidity,
    vpsat,
)
from .rewards import ConstraintSet, EpiScaler, PriceSet, RewardBreakdown, reward_epi, reward_penalty
from .weather import WeatherSeries, daily_radiation_sum, forecast, load_csv, resample, synthetic

SECONDS_PER_DAY = 86_400.0

RESAMPLE_MODES = ("per_step", "per_episode")


@dataclass(frozen=True)
class UncertaintyConfig:
    """Multiplicative parameter randomization: value * (1 + U(-delta, delta))."""

    delta: float = 0.0
    resample_mode: str = "per_step"
    randomized: Tuple[str, ...] = CROP_PARAMS

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError(f"delta must be in [0, 1), got {self.delta}")
        if self.resample_mode not in RESAMPLE_MODES:
            raise ConfigError(
                f"resample_mode must be one of {RESAMPLE_MODES}, got {self.resample_mode!r}"
            )
        bad = set(self.randomized) - set(PARAM_NAMES)
        if bad:
            raise ConfigError(f"unknown randomized parameter names: {sorted(bad)}")
        if not self.randomized:
            raise ConfigError("randomized parameter list must be non-empty")
        object.__setattr__(self, "randomized", tuple(self.randomized))


@dataclass(frozen=True)
class InitialState:
    """Initial indoor conditions in human units."""

    t_air: float = 18.0       # [degC]
    t_pipe: float = 18.0      # [degC]
    co2_ppm: float = 400.0    # [ppm]
    rh: float = 75.0          # [%]
    t_can24: float = 18.0     # [degC]
    t_can_sum: float = 0.0    # [degC day]
    w_fruit: float = 0.05     # [kg m-2]
    w_harvest: float = 0.0    # [kg m-2]

    def __post_init__(self) -> None:
        if not 0.0 <= self.rh <= 100.0:
            raise ConfigError(f"initial rh must be in [0, 100], got {self.rh}")
        if self.co2_ppm <= 0.0:
            raise ConfigError(f"initial co2_ppm must be > 0, got {self.co2_ppm}")
        for name in ("t_can_sum", "w_fruit", "w_harvest"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"initial {name} must be >= 0, got {getattr(self, name)}")

    def as_state(self) -> StateVector:
        return StateVector(
            t_air=self.t_air,
            t_pipe=self.t_pipe,
            co2_air=co2_ppm_to_mgm3(self.co2_ppm, self.t_air),
            vp_air=self.rh / 100.0 * vpsat(self.t_air),
            t_can24=self.t_can24,
            t_can_sum=self.t_can_sum,
            w_fruit=self.w_fruit,
            w_harvest=self.w_harvest,
        )


@dataclass(frozen=True)
class WeatherConfig:
    """Where episode weather comes from."""

    kind: str = "synthetic"            # "synthetic" or "csv"
    seed: int = 2021
    days: Optional[int] = None         # default: episode length, rounded up
    profile: str = "spring"
    path: Optional[str] = None         # csv only

    def __post_init__(self) -> None:
        if self.kind not in ("synthetic", "csv"):
            raise ConfigError(f"weather kind must be 'synthetic' or 'csv', got {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise ConfigError("weather kind 'csv' requires a path")
        if self.days is not None and self.days < 1:
            raise ConfigError(f"weather days must be >= 1, got {self.days}")


@dataclass(frozen=True)
class EnvConfig:
    episode_days: float = 3.0
    dt: float = 300.0                  # [s] control interval
    seed: int = 0                      # default reset seed
    observation: ObservationConfig = field(default_factory=ObservationConfig)
    uncertainty: UncertaintyConfig = field(default_factory=UncertaintyConfig)
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    prices: PriceSet = field(default_factory=PriceSet)
    initial_state: InitialState = field(default_factory=InitialState)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    weather: WeatherConfig = field(default_factory=WeatherConfig)
    parameters: Dict[str, float] = field(default_factory=dict)  # nominal overrides

    def __post_init__(self) -> None:
        if not math.isfinite(self.episode_days) or self.episode_days <= 0.0:
            raise ConfigError(f"episode_days must be positive, got {self.episode_days}")
        total = self.episode_days * SECONDS_PER_DAY
        steps = total / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ConfigError(
                f"episode length {total} s is not a whole number of dt={self.dt} s steps"
            )
        unknown = set(self.parameters) - set(PARAM_NAMES)
        if unknown:
            raise ConfigError(f"unknown parameter overrides: {sorted(unknown)}")

    @property
    def episode_steps(self) -> int:
        return int(round(self.episode_days * SECONDS_PER_DAY / self.dt))

    def nominal_parameters(self) -> ParameterSet:
        return ParameterSet.nominal(
            delta=self.uncertainty.delta,
            randomized_names=self.uncertainty.randomized,
            overrides=self.parameters,
        )


def build_weather(config: EnvConfig) -> WeatherSeries:
    """Construct and fit the weather series an EnvConfig asks for."""
    wc = config.weather
    if wc.kind == "synthetic":
        days = wc.days if wc.days is not None else int(math.ceil(config.episode_days))
        series = synthetic(seed=wc.seed, days=days, profile=wc.profile, dt=config.dt)
    else:
        series = load_csv(wc.path)
        if series.dt != config.dt:
            series = resample(series, config.dt)
    if len(series) < config.episode_steps:
        raise ConfigError(
            f"weather provides {len(series)} rows ({series.days:.2f} days) but the "
            f"episode needs {config.episode_steps} rows of {config.dt} s"
        )
    return series


def _draw_multipliers(rng: np.random.Generator, delta: float, n: int) -> np.ndarray:
    # Literal form of the randomization: 1 + U(-delta, +delta).
    return 1.0 + rng.uniform(-delta, delta, size=n)


def sample_parameters(
    p: ParameterSet,
    rng: np.random.Generator,
    return_multipliers: bool = False,
):
    """Draw a randomized ParameterSet around ``p``.

    Each name in ``p.randomized_names`` is scaled by an independent
    multiplier 1 + U(-delta, +delta); everything else passes through.
    """
    mult = _draw_multipliers(rng, p.delta, len(p.randomized_names))
    values = dict(p.values)
    for name, m in zip(p.randomized_names, mult):
        values[name] = values[name] * m
    sampled = p.with_values(values)
    if return_multipliers:
        return sampled, {n: float(m) for n, m in zip(p.randomized_names, mult)}
    return sampled


@dataclass(frozen=True)
class StepInfo:
    reward: RewardBreakdown
    state: StateVector
    control: ControlVector       # the clamped action actually applied
    disturbance: DisturbanceVector
    multipliers: Dict[str, float]

    def as_dict(self) -> dict:
        return {
            "reward": self.reward.as_dict(),
            "state": {f: getattr(self.state, f) for f in self.state.__dataclass_fields__},
            "control": {f: getattr(self.control, f) for f in self.control.__dataclass_fields__},
            "disturbance": {
                f: getattr(self.disturbance, f) for f in self.disturbance.__dataclass_fields__
            },
            "multipliers": dict(self.multipliers),
        }


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: StepInfo


class GreenhouseEnv:
    """Fixed-horizon greenhouse episode with seedable randomness.

    ``reset(seed)`` rebuilds the RNG and initial state; ``step(action)``
    clamps the action, advances one control interval and returns the
    observation, reward and a full breakdown.  Weather is fixed at
    construction, so resets replay the same conditions.
    """

    def __init__(self, config: EnvConfig, weather: WeatherSeries | None = None):
        self.config = config
        self.weather = weather if weather is not None else build_weather(config)
        if len(self.weather) < config.episode_steps:
            raise ConfigError(
                f"weather provides {len(self.weather)} rows but the episode needs "
                f"{config.episode_steps}"
            )
        self._nominal = config.nominal_parameters()
        config.integrator.validate_stability(self._nominal)
        self._pv_nominal = self._nominal.as_array()
        self._rand_idx = np.array(
            [PARAM_NAMES.index(n) for n in config.uncertainty.randomized], dtype=int
        )
        self._scaler = EpiScaler.from_config(config.prices, self._nominal, config.dt)
        self._labels = config.observation.labels()
        self._daily_rad = self._precompute_daily_radiation()
        self._rng: Optional[np.random.Generator] = None
        self._k = 0
        self._x = np.empty(0)
        self._prev_u = np.zeros(6)
        self._mult: Dict[str, float] = {}
        self._pv = self._pv_nominal.copy()

    def _precompute_daily_radiation(self) -> np.ndarray:
        n_days = int(math.floor(self.weather.days + 1e-9))
        if n_days < 1:
            n_days = 1
        out = np.empty(n_days)
        for i in range(n_days):
            out[i] = daily_radiation_sum(self.weather, i)
        return out

    # Introspection used by controllers, the CLI and the bindings bridge.
    @property
    def episode_steps(self) -> int:
        return self.config.episode_steps

    @property
    def step_index(self) -> int:
        return self._k

    @property
    def truncated(self) -> bool:
        return self._rng is not None and self._k >= self.episode_steps

    @property
    def state(self) -> StateVector:
        self._require_started()
        return StateVector.from_array(self._x)

    @property
    def observation_labels(self) -> Tuple[str, ...]:
        return self._labels

    @property
    def epi_scaler(self) -> EpiScaler:
        return self._scaler

    @property
    def nominal_parameters(self) -> ParameterSet:
        return self._nominal

    @property
    def multipliers(self) -> Dict[str, float]:
        return dict(self._mult)

    def clock(self) -> SimClock:
        return self.weather.clock_at(min(self._k, len(self.weather) - 1))

    def current_disturbance(self) -> DisturbanceVector:
        return self.weather.row(min(self._k, len(self.weather) - 1))

    def daily_radiation_today(self) -> float:
        """Radiation integral of the current simulated day [MJ m-2]."""
        day = int((self._k * self.config.dt) // SECONDS_PER_DAY)
        return float(self._daily_rad[min(day, len(self._daily_rad) - 1)])

    def _require_started(self) -> None:
        if self._rng is None:
            raise EpisodeError("reset the environment before using it")

    def _observe(self) -> np.ndarray:
        idx = min(self._k, len(self.weather) - 1)
        rows: Sequence[DisturbanceVector] = ()
        h = self.config.observation.forecast_steps
        if h > 0:
            rows = [DisturbanceVector.from_array(r) for r in forecast(self.weather, idx, h)]
        return observe(
            StateVector.from_array(self._x),
            ControlVector.from_array(self._prev_u),
            self.weather.row(idx),
            self._nominal,
            self.weather.clock_at(idx),
            self.config.observation,
            forecast_rows=rows,
        )

    def _sample(self) -> None:
        mult = _draw_multipliers(self._rng, self.config.uncertainty.delta, len(self._rand_idx))
        pv = self._pv_nominal.copy()
        pv[self._rand_idx] = pv[self._rand_idx] * mult
        self._pv = pv
        self._mult = {
            n: float(m) for n, m in zip(self.config.uncertainty.randomized, mult)
        }

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        """Start a fresh episode; identical seeds replay identical episodes."""
        actual = self.config.seed if seed is None else seed
        self._rng = np.random.default_rng(actual)
        self._k = 0
        self._x = self.config.initial_state.as_state().as_array()
        self._prev_u = np.zeros(6)
        if self.config.uncertainty.resample_mode == "per_episode":
            self._sample()
        else:
            # per_step draws happen inside step(); start from nominal.
            self._pv = self._pv_nominal.copy()
            self._mult = {n: 1.0 for n in self.config.uncertainty.randomized}
        return self._observe()

    def step(self, action: Sequence[float]) -> StepResult:
        self._require_started()
        if self._k >= self.episode_steps:
            raise EpisodeError(
                f"episode already truncated after {self.episode_steps} steps; reset first"
            )
        a = np.asarray(action, dtype=float)
        if a.shape != (6,):
            raise ValueError(f"action must have shape (6,), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError(f"action must be finite, got {a!r}")
        u = np.clip(a, U_MIN, U_MAX)

        if self.config.uncertainty.resample_mode == "per_step":
            self._sample()

        d = self.weather.data[self._k]
        y = step_array(self._x, u, d, self._pv, self.config.integrator)

        delta_harvest = y[7] - self._x[7]
        epi_raw = reward_epi(delta_harvest, u, self.config.prices, self.config.dt)
        epi_scaled = self._scaler.scale(epi_raw)
        y_constrained = (
            y[0],
            co2_mgm3_to_ppm(y[2], y[0]),
            relative_humidity(y[3], y[0]),
        )
        penalties = reward_penalty(y_constrained, self.config.constraints)
        breakdown = RewardBreakdown(epi_raw=epi_raw, epi_scaled=epi_scaled, penalties=penalties)

        self._x = y
        self._prev_u = u
        self._k += 1
        truncated = self._k >= self.episode_steps

        info = StepInfo(
            reward=breakdown,
            state=StateVector.from_array(y),
            control=ControlVector.from_array(u),
            disturbance=DisturbanceVector.from_array(d),
            multipliers=dict(self._mult),
        )
        return StepResult(
            observation=self._observe(),
            reward=breakdown.total,
            terminated=False,
            truncated=truncated,
            info=info,
        )


@dataclass(frozen=True)
class EpisodeMetrics:
    cum_reward: float
    cum_epi_raw: float
    cum_penalty: float
    n_steps: int


def episode_metrics(results: Sequence[StepResult]) -> EpisodeMetrics:
    """Aggregate a complete episode; rejects empty or unfinished ones."""
    if not results:
        raise EpisodeError("cannot aggregate an empty episode")
    if not results[-1].truncated:
        raise EpisodeError("episode incomplete: final step is not truncated")
    cum_reward = 0.0
    cum_epi = 0.0
    cum_pen = 0.0
    for r in results:
        b = r.info.reward
        cum_reward += b.total
        cum_epi += b.epi_raw
        cum_pen += b.penalties[0] + b.penalties[1] + b.penalties[2]
    return EpisodeMetrics(
        cum_reward=cum_reward,
        cum_epi_raw=cum_epi,
        cum_penalty=cum_pen,
        n_steps=len(results),
    )


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Sum of gamma**k * r_k, evaluated by a backward fold."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    total = 0.0
    for r in reversed(list(rewards)):
        total = float(r) + gamma * total
    return total
