"""Economic reward and constraint penalties.

The per-step reward is a scaled economic profit indicator (harvest income
minus resource costs) minus linear penalties for leaving the admissible
climate band in temperature, CO2 and relative humidity.  Each penalty is
capped at 1, so the total lies in [-3, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .errors import ConfigError
from .model import I_GLOB_MAX, ParameterSet, U_MAX

J_PER_KWH = 3.6e6
MG_PER_KG = 1e6


@dataclass(frozen=True)
class PriceSet:
    fruit: float = 1.6    # [EUR kg-1] fruit dry weight price
    co2: float = 0.3      # [EUR kg-1] injected CO2
    boiler: float = 0.09  # [EUR kWh-1] boiler heat
    lamp: float = 0.3     # [EUR kWh-1] lamp electricity

    def __post_init__(self) -> None:
        for name in ("fruit", "co2", "boiler", "lamp"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ConfigError(f"price {name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class ConstraintSet:
    """Admissible climate band and penalty scales.

    Order everywhere: (t_air [degC], co2 [ppm], rh [%]).
    """

    y_min: Tuple[float, float, float] = (15.0, 300.0, 50.0)
    y_max: Tuple[float, float, float] = (34.0, 1600.0, 85.0)
    penalty_scale: Tuple[float, float, float] = (10.0, 1000.0, 30.0)

    def __post_init__(self) -> None:
        if len(self.y_min) != 3 or len(self.y_max) != 3 or len(self.penalty_scale) != 3:
            raise ConfigError("constraint vectors must have length 3 (t_air, co2, rh)")
        for lo, hi in zip(self.y_min, self.y_max):
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
                raise ConfigError(f"constraint bounds must satisfy y_min < y_max, got {lo} >= {hi}")
        for s in self.penalty_scale:
            if not math.isfinite(s) or s <= 0.0:
                raise ConfigError(f"penalty scale must be positive, got {s}")
        object.__setattr__(self, "y_min", tuple(float(v) for v in self.y_min))
        object.__setattr__(self, "y_max", tuple(float(v) for v in self.y_max))
        object.__setattr__(self, "penalty_scale", tuple(float(v) for v in self.penalty_scale))


def reward_epi(
    delta_harvest_kg: float, u: Sequence[float], prices: PriceSet, dt: float
) -> float:
    """Raw economic profit indicator for one step [EUR m-2].

    Income from newly harvested dry weight minus CO2, boiler and lamp
    costs at their per-step consumption.
    """
    co2_cost = prices.co2 * float(u[1]) * dt / MG_PER_KG
    boiler_cost = prices.boiler * float(u[0]) * dt / J_PER_KWH
    lamp_cost = prices.lamp * float(u[4]) * dt / J_PER_KWH
    return prices.fruit * float(delta_harvest_kg) - (co2_cost + boiler_cost + lamp_cost)


def penalty_raw(y: Sequence[float], bounds: ConstraintSet) -> Tuple[float, float, float]:
    """Distance outside the admissible band per constrained variable, in
    native units; zero inside the band."""
    out = []
    for v, lo, hi in zip((float(a) for a in y), bounds.y_min, bounds.y_max):
        if v > hi:
            out.append(v - hi)
        elif v < lo:
            out.append(lo - v)
        else:
            out.append(0.0)
    return (out[0], out[1], out[2])


def reward_penalty(y: Sequence[float], bounds: ConstraintSet) -> Tuple[float, float, float]:
    """Scaled penalties in [0, 1] for (t_air, co2 ppm, rh)."""
    raw = penalty_raw(y, bounds)
    return tuple(min(1.0, r / s) for r, s in zip(raw, bounds.penalty_scale))  # type: ignore[return-value]


@dataclass(frozen=True)
class EpiScaler:
    """Affine map of the raw profit indicator onto [0, 1].

    The lower anchor is the cost of running every resource at its maximum
    for one step with no harvest; the upper anchor is the income from the
    largest harvest mass a step can produce under nominal parameters and
    peak light.
    """

    epi_min: float
    epi_max: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epi_min) and math.isfinite(self.epi_max)):
            raise ConfigError("EPI anchors must be finite")
        if self.epi_max <= self.epi_min:
            raise ConfigError(
                f"degenerate EPI scaling: epi_max {self.epi_max} <= epi_min {self.epi_min}"
            )

    @classmethod
    def from_config(cls, prices: PriceSet, p: ParameterSet, dt: float) -> "EpiScaler":
        u_max = U_MAX
        epi_min = -(
            prices.co2 * float(u_max[1]) * dt / MG_PER_KG
            + prices.boiler * float(u_max[0]) * dt / J_PER_KWH
            + prices.lamp * float(u_max[4]) * dt / J_PER_KWH
        )
        v = p.values
        par_max = v["eta_par_sun"] * I_GLOB_MAX + v["eta_par_lamp"] * float(u_max[4])
        max_harvest_kg = v["c_ab"] * v["eps_light"] * par_max * dt / MG_PER_KG
        epi_max = prices.fruit * max_harvest_kg
        return cls(epi_min=epi_min, epi_max=epi_max)

    def scale(self, epi_raw: float) -> float:
        z = (epi_raw - self.epi_min) / (self.epi_max - self.epi_min)
        return min(1.0, max(0.0, z))


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-step reward components; ``total`` is exactly
    epi_scaled - (penalty_t + penalty_co2 + penalty_rh)."""

    epi_raw: float
    epi_scaled: float
    penalties: Tuple[float, float, float]

    @property
    def total(self) -> float:
        return combined_reward(self.epi_scaled, self.penalties)

    def as_dict(self) -> dict:
        return {
            "epi_raw": self.epi_raw,
            "epi_scaled": self.epi_scaled,
            "penalties": {
                "t_air": self.penalties[0],
                "co2": self.penalties[1],
                "rh": self.penalties[2],
            },
            "total": self.total,
        }


def combined_reward(epi_scaled: float, penalties: Sequence[float]) -> float:
    """Total step reward in [-3, 1]."""
    return epi_scaled - (penalties[0] + penalties[1] + penalties[2])
