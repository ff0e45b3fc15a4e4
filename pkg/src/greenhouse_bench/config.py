"""YAML configuration loading with schema and semantic validation."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Dict

import jsonschema
import yaml

from .control import CemConfig
from .env import EnvConfig, InitialState, UncertaintyConfig, WeatherConfig
from .errors import ConfigError
from .integrator import IntegratorConfig
from .model import ObservationConfig
from .rewards import ConstraintSet, PriceSet


def _schema() -> Dict[str, Any]:
    text = resources.files("greenhouse_bench.schemas").joinpath("env_config.schema.json").read_text()
    return json.loads(text)


def _load_yaml(path: str | Path) -> Dict[str, Any]:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML: {e}") from None
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping, got {type(doc).__name__}")
    return doc


def env_config_from_dict(doc: Dict[str, Any]) -> EnvConfig:
    """Build an EnvConfig from a parsed document; raises ConfigError with
    the offending path on any violation."""
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "(root)"
        raise ConfigError(f"config invalid at {where}: {e.message}") from None

    kwargs: Dict[str, Any] = {}
    for key in ("episode_days", "dt", "seed"):
        if key in doc:
            kwargs[key] = doc[key]
    if "observation" in doc:
        obs = dict(doc["observation"])
        if "groups" in obs:
            obs["groups"] = tuple(obs["groups"])
        kwargs["observation"] = ObservationConfig(**obs)
    if "uncertainty" in doc:
        unc = dict(doc["uncertainty"])
        if "randomized" in unc:
            unc["randomized"] = tuple(unc["randomized"])
        kwargs["uncertainty"] = UncertaintyConfig(**unc)
    if "constraints" in doc:
        con = {k: tuple(v) for k, v in doc["constraints"].items()}
        kwargs["constraints"] = ConstraintSet(**con)
    if "prices" in doc:
        kwargs["prices"] = PriceSet(**doc["prices"])
    if "initial_state" in doc:
        kwargs["initial_state"] = InitialState(**doc["initial_state"])
    if "integrator" in doc:
        integ = dict(doc["integrator"])
        integ.setdefault("dt", doc.get("dt", 300.0))
        kwargs["integrator"] = IntegratorConfig(**integ)
    elif "dt" in doc:
        kwargs["integrator"] = IntegratorConfig(dt=doc["dt"])
    if "weather" in doc:
        kwargs["weather"] = WeatherConfig(**doc["weather"])
    if "parameters" in doc:
        kwargs["parameters"] = {str(k): float(v) for k, v in doc["parameters"].items()}

    cfg = EnvConfig(**kwargs)
    if cfg.integrator.dt != cfg.dt:
        raise ConfigError(
            f"integrator dt {cfg.integrator.dt} must equal the control interval {cfg.dt}"
        )
    return cfg


def load_env_config(path: str | Path) -> EnvConfig:
    return env_config_from_dict(_load_yaml(path))


def load_cem_config(path: str | Path) -> CemConfig:
    doc = _load_yaml(path)
    allowed = {
        "population",
        "elite_frac",
        "iterations",
        "init_std",
        "init_bias",
        "std_floor",
        "eval_episodes",
        "gamma",
        "seed",
    }
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown trainer config keys: {sorted(unknown)}")
    return CemConfig(**doc)


def default_config_dict() -> Dict[str, Any]:
    """A complete, explicit copy of the default configuration."""
    cfg = EnvConfig()
    return {
        "episode_days": cfg.episode_days,
        "dt": cfg.dt,
        "seed": cfg.seed,
        "observation": {
            "groups": list(cfg.observation.groups),
            "forecast_steps": cfg.observation.forecast_steps,
        },
        "uncertainty": {
            "delta": cfg.uncertainty.delta,
            "resample_mode": cfg.uncertainty.resample_mode,
            "randomized": list(cfg.uncertainty.randomized),
        },
        "constraints": {
            "y_min": list(cfg.constraints.y_min),
            "y_max": list(cfg.constraints.y_max),
            "penalty_scale": list(cfg.constraints.penalty_scale),
        },
        "prices": {
            "fruit": cfg.prices.fruit,
            "co2": cfg.prices.co2,
            "boiler": cfg.prices.boiler,
            "lamp": cfg.prices.lamp,
        },
        "initial_state": {
            "t_air": cfg.initial_state.t_air,
            "t_pipe": cfg.initial_state.t_pipe,
            "co2_ppm": cfg.initial_state.co2_ppm,
            "rh": cfg.initial_state.rh,
            "t_can24": cfg.initial_state.t_can24,
            "t_can_sum": cfg.initial_state.t_can_sum,
            "w_fruit": cfg.initial_state.w_fruit,
            "w_harvest": cfg.initial_state.w_harvest,
        },
        "integrator": {
            "method": cfg.integrator.method,
            "substeps": cfg.integrator.substeps,
        },
        "weather": {
            "kind": cfg.weather.kind,
            "seed": cfg.weather.seed,
            "days": cfg.weather.days,
            "profile": cfg.weather.profile,
        },
        "parameters": {},
    }
