"""Greenhouse crop production benchmark environment.

A fast, fully seedable simulation of greenhouse climate and crop growth
for evaluating and training control policies, with a rule-based
reference controller, parametric uncertainty, an economic reward with
climate constraint penalties, and a CLI for rollouts, sweeps, speed
measurement and policy training.
"""

from .control import (
    CemConfig,
    CemResult,
    ConstantController,
    IndoorSnapshot,
    PolicyController,
    PolicyParams,
    RuleBasedConfig,
    RuleBasedController,
    cem_train,
    lamp_decision,
    make_controller,
    p_control,
    policy_act,
    rollout,
    rule_based_action,
)
from .config import default_config_dict, env_config_from_dict, load_cem_config, load_env_config
from .env import (
    EnvConfig,
    EpisodeMetrics,
    GreenhouseEnv,
    InitialState,
    StepInfo,
    StepResult,
    UncertaintyConfig,
    WeatherConfig,
    build_weather,
    discounted_return,
    episode_metrics,
    sample_parameters,
)
from .errors import (
    ConfigError,
    EpisodeError,
    GreenhouseError,
    IntegrationError,
    PolicyArtifactError,
    WeatherError,
)
from .integrator import IntegratorConfig, convergence_order, step
from .model import (
    CONTROL_FIELDS,
    CROP_PARAMS,
    ControlVector,
    DisturbanceVector,
    DISTURBANCE_FIELDS,
    ObservationConfig,
    PARAM_DEFAULTS,
    PARAM_NAMES,
    ParameterSet,
    STATE_FIELDS,
    SimClock,
    StateVector,
    U_MAX,
    U_MIN,
    clamp_controls,
    co2_mgm3_to_ppm,
    co2_ppm_to_mgm3,
    derivative,
    observation_normalization,
    observe,
    relative_humidity,
    vpsat,
)
from .rewards import (
    ConstraintSet,
    EpiScaler,
    PriceSet,
    RewardBreakdown,
    combined_reward,
    penalty_raw,
    reward_epi,
    reward_penalty,
)
from .weather import (
    PROFILES,
    SyntheticProfile,
    WeatherSeries,
    daily_radiation_sum,
    forecast,
    resample,
)
from .weather import load_csv as load_weather_csv
from .weather import save_csv as save_weather_csv
from .weather import synthetic as synthetic_weather

__version__ = "0.1.0"
