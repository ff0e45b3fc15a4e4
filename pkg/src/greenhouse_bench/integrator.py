"""Fixed-step explicit integration of the greenhouse dynamics.

One environment step advances the state over a control interval ``dt``
using ``substeps`` equal sub-steps of RK4 (default) or forward Euler,
holding controls and weather constant.  Non-negative states (co2_air,
vp_air, w_fruit) are projected after every sub-step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, IntegrationError
from .model import (
    ControlVector,
    DisturbanceVector,
    ParameterSet,
    RHO_CP,
    STATE_FIELDS,
    StateVector,
    U_MAX,
    U_MIN,
)

METHODS = ("rk4", "euler")
_METHOD_IDS = {"rk4": _kernels.METHOD_RK4, "euler": _kernels.METHOD_EULER}

# Wind bound used by the a-priori stiffness estimate [m s-1].
_WIND_BOUND = 15.0


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 300.0    # [s] control interval
    substeps: int = 20   # internal sub-steps per control interval
    method: str = "rk4"

    def __post_init__(self) -> None:
        if not math.isfinite(self.dt) or self.dt <= 0.0:
            raise ConfigError(f"dt must be positive and finite, got {self.dt}")
        if self.substeps < 1:
            raise ConfigError(f"substeps must be >= 1, got {self.substeps}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")

    @property
    def h_sub(self) -> float:
        return self.dt / self.substeps

    def validate_stability(self, p: ParameterSet) -> None:
        """Reject sub-step sizes outside the explicit stability region.

        Uses a conservative bound on the fastest linear rate of each state
        equation at full ventilation and strong wind.
        """
        v = p.values
        phi_max = v["l_leak"] + v["l_vent"] * (1.0 + v["c_wind"] * _WIND_BOUND)
        rates = {
            "t_air": (v["k_pipe"] + v["u_cov"] + RHO_CP * phi_max) / v["c_air"],
            "t_pipe": v["k_pipe"] / v["c_pipe"],
            "co2_air": phi_max / v["h_air"],
            "vp_air": (phi_max + v["k_cond"]) / v["c_vp"],
            "t_can24": 1.0 / v["tau_24"],
        }
        lam = max(rates.values())
        if self.h_sub * lam > 2.0:
            worst = max(rates, key=rates.get)
            raise ConfigError(
                f"sub-step {self.h_sub:.3g} s exceeds the stability bound for "
                f"{worst} (rate {lam:.3g} 1/s); increase substeps or reduce dt"
            )


def step_array(
    x: np.ndarray,
    u: np.ndarray,
    d: np.ndarray,
    p: np.ndarray,
    cfg: IntegratorConfig,
) -> np.ndarray:
    """Array fast path used by the environment; raises on numerical failure."""
    y, bad_sub, bad_field = _kernels.step(
        x, u, d, p, cfg.dt, cfg.substeps, _METHOD_IDS[cfg.method]
    )
    if bad_sub >= 0:
        raise IntegrationError(
            f"non-finite value in state field {STATE_FIELDS[bad_field]!r} "
            f"at sub-step {bad_sub + 1}/{cfg.substeps}"
        )
    return y


def step(
    x: StateVector,
    u: ControlVector,
    d: DisturbanceVector,
    p: ParameterSet,
    cfg: IntegratorConfig | None = None,
) -> StateVector:
    """Advance one control interval. ``u`` must already lie in the actuator box."""
    cfg = cfg or IntegratorConfig()
    ua = u.as_array()
    if np.any(ua < U_MIN) or np.any(ua > U_MAX):
        raise ValueError(f"control out of bounds, clamp first: {ua!r}")
    xa = x.as_array()
    if not np.all(np.isfinite(xa)):
        raise ValueError(f"state must be finite, got {xa!r}")
    y = step_array(xa, ua, d.as_array(), p.as_array(), cfg)
    return StateVector.from_array(y)


def convergence_order(
    x: StateVector,
    u: ControlVector,
    d: DisturbanceVector,
    p: ParameterSet,
    method: str = "rk4",
    dt: float = 300.0,
) -> float | str:
    """Empirical order of accuracy at the given point.

    Compares sub-step counts (5, 10, 20) against a 10000-sub-step RK4
    reference over one control interval and averages the dyadic error
    ratios.  Returns the string "exact" when all errors vanish to within
    round-off, e.g. at a fixed point.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    xa, ua, da, pa = x.as_array(), u.as_array(), d.as_array(), p.as_array()
    ref = step_array(xa, ua, da, pa, IntegratorConfig(dt=dt, substeps=10_000, method="rk4"))
    scale = np.maximum(np.abs(ref), 1e-9)
    errs = []
    for n in (5, 10, 20):
        y = step_array(xa, ua, da, pa, IntegratorConfig(dt=dt, substeps=n, method=method))
        errs.append(float(np.max(np.abs(y - ref) / scale)))
    if max(errs) < 1e-13:
        return "exact"
    orders = []
    for e_coarse, e_fine in zip(errs[:-1], errs[1:]):
        if e_fine <= 0.0:
            return "exact" if e_coarse < 1e-13 else float("inf")
        orders.append(math.log2(e_coarse / e_fine))
    return float(np.mean(orders))
