"""Controllers and policy optimization.

Ships a climate-computer style rule-based controller, a bounded affine
policy with a JSON artifact format, and a cross-entropy method trainer
for that policy.  A rollout helper runs any controller against an
environment deterministically.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .env import EnvConfig, GreenhouseEnv, StepResult, discounted_return, episode_metrics
from .errors import ConfigError, PolicyArtifactError
from .model import (
    DisturbanceVector,
    SimClock,
    StateVector,
    U_MAX,
    U_MIN,
    co2_mgm3_to_ppm,
    observation_normalization,
    relative_humidity,
)


def p_control(error: float, band: float, direction: float = 1.0) -> float:
    """Proportional response clipped to [0, 1].

    ``band`` is the error magnitude at which the actuator saturates;
    ``direction`` +1 acts on positive error, -1 on negative.
    """
    if band <= 0.0 or not math.isfinite(band):
        raise ValueError(f"band must be positive, got {band}")
    v = direction * error / band
    return min(1.0, max(0.0, v))


@dataclass(frozen=True)
class PBands:
    """Saturation bands for the proportional rules."""

    heat: float = 2.0      # [degC]
    co2: float = 100.0     # [ppm]
    vent_t: float = 2.0    # [degC]
    vent_rh: float = 5.0   # [%]
    screen: float = 2.0    # [degC]


@dataclass(frozen=True)
class RuleBasedConfig:
    t_set_light: float = 19.5        # [degC] air setpoint, light period
    t_set_dark: float = 16.5         # [degC] air setpoint, dark period
    co2_setpoint: float = 800.0      # [ppm] light-period CO2 target
    rh_threshold: float = 85.0       # [%] venting starts above this
    vent_open_offset: float = 5.0    # [degC] above setpoint before venting
    thscr_open_offset: float = 4.0   # [degC] above setpoint to force screen open
    thscr_out_day: float = 5.0       # [degC] close screen below this outside, day
    thscr_out_night: float = 10.0    # [degC] same, night
    lamp_window: Tuple[float, float] = (0.0, 18.0)  # [h) lamps allowed
    lamp_rad_cutoff: float = 400.0   # [W m-2] lamps off above this sun
    lamp_daily_cutoff: float = 10.0  # [MJ m-2 day-1] lamps off on bright days
    light_rad_threshold: float = 5.0 # [W m-2] solar darkness boundary
    bands: PBands = field(default_factory=PBands)


@dataclass(frozen=True)
class IndoorSnapshot:
    """Indoor quantities the rules react to."""

    t_air: float    # [degC]
    co2_ppm: float  # [ppm]
    rh: float       # [%]

    @classmethod
    def from_state(cls, x: StateVector) -> "IndoorSnapshot":
        return cls(
            t_air=x.t_air,
            co2_ppm=co2_mgm3_to_ppm(x.co2_air, x.t_air),
            rh=relative_humidity(x.vp_air, x.t_air),
        )


def lamp_decision(clock: SimClock, i_glob: float, daily_rad_sum: float, cfg: RuleBasedConfig) -> bool:
    """Lamps run inside the allowed window when the sun is weak and the
    day is predicted dim."""
    lo, hi = cfg.lamp_window
    return (
        lo <= clock.hour < hi
        and i_glob <= cfg.lamp_rad_cutoff
        and daily_rad_sum <= cfg.lamp_daily_cutoff
    )


def rule_based_action(
    indoor: IndoorSnapshot,
    d: DisturbanceVector,
    clock: SimClock,
    daily_rad_sum: float,
    light_period: bool,
    cfg: RuleBasedConfig | None = None,
) -> np.ndarray:
    """One actuator vector from the climate-computer rules.

    ``light_period`` is true when lamps were on at the previous step or
    the sun is above the darkness threshold.
    """
    cfg = cfg or RuleBasedConfig()
    b = cfg.bands

    u_lamp = U_MAX[4] if lamp_decision(clock, d.i_glob, daily_rad_sum, cfg) else 0.0
    t_set = cfg.t_set_light if light_period else cfg.t_set_dark

    u_boil = U_MAX[0] * p_control(t_set - indoor.t_air, b.heat)
    u_co2 = U_MAX[1] * p_control(cfg.co2_setpoint - indoor.co2_ppm, b.co2) if light_period else 0.0

    vent_t = p_control(indoor.t_air - (t_set + cfg.vent_open_offset), b.vent_t)
    vent_rh = p_control(indoor.rh - cfg.rh_threshold, b.vent_rh)
    u_vent = max(vent_t, vent_rh)

    # Thermal screen: close against cold outside unless the house is too
    # warm or venting for humidity.
    thr = cfg.thscr_out_day if light_period else cfg.thscr_out_night
    scr_cold = p_control(thr - d.t_out, b.screen)
    scr_open = max(p_control(indoor.t_air - (t_set + cfg.thscr_open_offset), b.screen), vent_rh)
    u_thscr = min(scr_cold, 1.0 - scr_open)

    # Blackout screen traps lamp light during solar darkness.
    u_blscr = 1.0 if (u_lamp > 0.0 and d.i_glob <= cfg.light_rad_threshold) else 0.0

    return np.array([u_boil, u_co2, u_thscr, u_vent, u_lamp, u_blscr])


class Controller(Protocol):
    def reset(self) -> None: ...

    def act(self, env: GreenhouseEnv, observation: np.ndarray) -> np.ndarray: ...


class RuleBasedController:
    """Stateful wrapper tracking the light period across steps."""

    def __init__(self, cfg: RuleBasedConfig | None = None):
        self.cfg = cfg or RuleBasedConfig()
        self._prev_lamp = 0.0

    def reset(self) -> None:
        self._prev_lamp = 0.0

    def act(self, env: GreenhouseEnv, observation: np.ndarray) -> np.ndarray:
        d = env.current_disturbance()
        light = self._prev_lamp > 0.0 or d.i_glob > self.cfg.light_rad_threshold
        u = rule_based_action(
            IndoorSnapshot.from_state(env.state),
            d,
            env.clock(),
            env.daily_radiation_today(),
            light,
            self.cfg,
        )
        self._prev_lamp = float(u[4])
        return u


class ConstantController:
    """Always returns the same (clamped) actuator vector."""

    def __init__(self, u: Sequence[float]):
        a = np.asarray(u, dtype=float)
        if a.shape != (6,):
            raise ConfigError(f"constant controller needs 6 values, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ConfigError(f"constant controller values must be finite, got {a!r}")
        self.u = np.clip(a, U_MIN, U_MAX)

    def reset(self) -> None:
        pass

    def act(self, env: GreenhouseEnv, observation: np.ndarray) -> np.ndarray:
        return self.u


@dataclass(frozen=True)
class PolicyParams:
    """Bounded affine policy: u = u_min + sigmoid(W z + b) * (u_max - u_min)
    over normalized observations z."""

    weights: np.ndarray            # (6, L)
    bias: np.ndarray               # (6,)
    obs_labels: Tuple[str, ...]
    obs_center: np.ndarray         # (L,)
    obs_scale: np.ndarray          # (L,)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        c = np.asarray(self.obs_center, dtype=float)
        s = np.asarray(self.obs_scale, dtype=float)
        L = len(self.obs_labels)
        if w.shape != (6, L):
            raise PolicyArtifactError(f"weights must have shape (6, {L}), got {w.shape}")
        if b.shape != (6,):
            raise PolicyArtifactError(f"bias must have shape (6,), got {b.shape}")
        if c.shape != (L,) or s.shape != (L,):
            raise PolicyArtifactError("normalization arrays must match the label count")
        for arr, name in ((w, "weights"), (b, "bias"), (c, "obs_center"), (s, "obs_scale")):
            if not np.all(np.isfinite(arr)):
                raise PolicyArtifactError(f"{name} must be finite")
        if np.any(s <= 0.0):
            raise PolicyArtifactError("obs_scale entries must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "obs_labels", tuple(self.obs_labels))
        object.__setattr__(self, "obs_center", c)
        object.__setattr__(self, "obs_scale", s)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(",".join(self.obs_labels).encode()).hexdigest()[:16]

    @property
    def dim(self) -> int:
        return self.weights.size + self.bias.size

    def to_json(self) -> str:
        doc = {
            "schema_version": 1,
            "kind": "affine_logistic_policy",
            "obs_fingerprint": self.fingerprint,
            "obs_labels": list(self.obs_labels),
            "obs_center": self.obs_center.tolist(),
            "obs_scale": self.obs_scale.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "PolicyParams":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise PolicyArtifactError(f"policy artifact is not valid JSON: {e}") from None
        if not isinstance(doc, dict) or doc.get("schema_version") != 1:
            raise PolicyArtifactError(
                f"unsupported policy schema_version: {doc.get('schema_version')!r}"
            )
        if doc.get("kind") != "affine_logistic_policy":
            raise PolicyArtifactError(f"unsupported policy kind: {doc.get('kind')!r}")
        try:
            params = cls(
                weights=np.array(doc["weights"], dtype=float),
                bias=np.array(doc["bias"], dtype=float),
                obs_labels=tuple(doc["obs_labels"]),
                obs_center=np.array(doc["obs_center"], dtype=float),
                obs_scale=np.array(doc["obs_scale"], dtype=float),
            )
        except KeyError as e:
            raise PolicyArtifactError(f"policy artifact missing field {e}") from None
        stored = doc.get("obs_fingerprint")
        if stored is not None and stored != params.fingerprint:
            raise PolicyArtifactError(
                f"policy fingerprint {stored} does not match its labels "
                f"({params.fingerprint})"
            )
        return params

    @classmethod
    def load(cls, path: str | Path) -> "PolicyParams":
        return cls.from_json(Path(path).read_text())


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def policy_act(params: PolicyParams, observation: np.ndarray) -> np.ndarray:
    """Evaluate the policy; output always lies in the actuator box."""
    obs = np.asarray(observation, dtype=float)
    if obs.shape != (len(params.obs_labels),):
        raise ValueError(
            f"observation length {obs.shape} does not match policy ({len(params.obs_labels)},)"
        )
    z = (obs - params.obs_center) / params.obs_scale
    act = _sigmoid(params.weights @ z + params.bias)
    return U_MIN + act * (U_MAX - U_MIN)


class PolicyController:
    def __init__(self, params: PolicyParams, env_labels: Sequence[str] | None = None):
        if env_labels is not None and tuple(env_labels) != params.obs_labels:
            raise PolicyArtifactError(
                "policy was trained on a different observation layout: "
                f"{params.fingerprint} vs environment "
                f"{hashlib.sha256(','.join(env_labels).encode()).hexdigest()[:16]}"
            )
        self.params = params

    def reset(self) -> None:
        pass

    def act(self, env: GreenhouseEnv, observation: np.ndarray) -> np.ndarray:
        return policy_act(self.params, observation)


def rollout(
    env: GreenhouseEnv, controller: Controller, seed: Optional[int] = None
) -> List[StepResult]:
    """Run one full episode and return every StepResult in order."""
    controller.reset()
    obs = env.reset(seed)
    results: List[StepResult] = []
    for _ in range(env.episode_steps):
        u = controller.act(env, obs)
        res = env.step(u)
        results.append(res)
        obs = res.observation
    return results


def make_controller(spec: str, env: GreenhouseEnv) -> Controller:
    """Build a controller from a CLI-style descriptor.

    Accepted forms: ``rule_based``, ``constant:v0,...,v5`` (or
    ``constant:0`` for all zeros), ``policy:<path.json>``.
    """
    if spec == "rule_based":
        return RuleBasedController()
    if spec.startswith("constant:"):
        body = spec.split(":", 1)[1]
        parts = [s for s in body.split(",") if s != ""]
        try:
            vals = [float(v) for v in parts]
        except ValueError:
            raise ConfigError(f"bad constant controller values: {body!r}") from None
        if len(vals) == 1:
            vals = vals * 6
        if len(vals) != 6:
            raise ConfigError(f"constant controller needs 1 or 6 values, got {len(vals)}")
        return ConstantController(vals)
    if spec.startswith("policy:"):
        path = spec.split(":", 1)[1]
        return PolicyController(PolicyParams.load(path), env.observation_labels)
    raise ConfigError(
        f"unknown controller {spec!r}; use rule_based, constant:<values> or policy:<path>"
    )


@dataclass(frozen=True)
class CemConfig:
    """Cross-entropy method settings for the affine policy."""

    population: int = 24
    elite_frac: float = 0.25
    iterations: int = 10
    init_std: float = 0.5
    init_bias: float = -2.0  # starts actuators near their lower bound
    std_floor: float = 1e-3
    eval_episodes: int = 1
    gamma: float = 1.0       # 1.0 sums raw rewards
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ConfigError(f"population must be >= 2, got {self.population}")
        if not 0.0 < self.elite_frac <= 1.0:
            raise ConfigError(f"elite_frac must be in (0, 1], got {self.elite_frac}")
        if self.n_elite < 1:
            raise ConfigError("elite_frac too small: zero elites")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.init_std <= 0.0:
            raise ConfigError(f"init_std must be positive, got {self.init_std}")
        if not math.isfinite(self.init_bias):
            raise ConfigError(f"init_bias must be finite, got {self.init_bias}")
        if self.std_floor < 0.0:
            raise ConfigError(f"std_floor must be >= 0, got {self.std_floor}")
        if self.eval_episodes < 1:
            raise ConfigError(f"eval_episodes must be >= 1, got {self.eval_episodes}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")

    @property
    def n_elite(self) -> int:
        return max(1, int(round(self.population * self.elite_frac)))


@dataclass(frozen=True)
class CemResult:
    params: PolicyParams
    best_return: float
    # rows: (iteration, mean_return, max_return)
    curve: Tuple[Tuple[int, float, float], ...]


def _theta_to_params(theta: np.ndarray, labels: Tuple[str, ...]) -> PolicyParams:
    L = len(labels)
    center, scale = observation_normalization(labels)
    return PolicyParams(
        weights=theta[: 6 * L].reshape(6, L),
        bias=theta[6 * L :],
        obs_labels=labels,
        obs_center=center,
        obs_scale=scale,
    )


def _member_seed(base: int, iteration: int, member: int, episode: int) -> int:
    ss = np.random.SeedSequence([base, iteration, member, episode])
    return int(ss.generate_state(1)[0])


def _elite_refit(
    draws: np.ndarray, returns: np.ndarray, n_elite: int, std_floor: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """New (mean, std) from the top members; mean is their exact average."""
    order = np.argsort(returns, kind="stable")
    elite_idx = order[-n_elite:]
    elite = draws[elite_idx]
    mean = elite.mean(axis=0)
    std = elite.std(axis=0) + std_floor
    return mean, std, elite_idx


def cem_train(
    env_config: EnvConfig,
    cem: CemConfig,
    progress: Optional[Callable[[int, float, float], None]] = None,
) -> CemResult:
    """Optimize the affine policy by iterated elite refitting.

    Fully deterministic for a given (env_config, cem) pair: parameter
    draws come from one seeded generator and every evaluation episode
    seeds the environment from (seed, iteration, member, episode).
    """
    env = GreenhouseEnv(env_config)
    labels = env.observation_labels
    L = len(labels)
    dim = 6 * L + 6
    rng = np.random.default_rng(cem.seed)
    mean = np.zeros(dim)
    mean[6 * L :] = cem.init_bias
    std = np.full(dim, cem.init_std)

    best_return = -math.inf
    best_theta = mean.copy()
    curve: List[Tuple[int, float, float]] = []

    for it in range(cem.iterations):
        draws = rng.standard_normal((cem.population, dim)) * std + mean
        returns = np.empty(cem.population)
        for m in range(cem.population):
            params = _theta_to_params(draws[m], labels)
            controller = PolicyController(params)
            total = 0.0
            for ep in range(cem.eval_episodes):
                results = rollout(env, controller, seed=_member_seed(cem.seed, it, m, ep))
                rewards = [r.reward for r in results]
                total += discounted_return(rewards, cem.gamma)
            returns[m] = total / cem.eval_episodes
            if returns[m] > best_return:
                best_return = float(returns[m])
                best_theta = draws[m].copy()
        mean, std, _ = _elite_refit(draws, returns, cem.n_elite, cem.std_floor)
        curve.append((it, float(returns.mean()), float(returns.max())))
        if progress is not None:
            progress(it, float(returns.mean()), float(returns.max()))

    return CemResult(
        params=_theta_to_params(best_theta, labels),
        best_return=best_return,
        curve=tuple(curve),
    )
