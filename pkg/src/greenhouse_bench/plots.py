"""Report figures rendered next to CLI data outputs. File output only."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .env import StepResult
from .model import U_MAX, co2_mgm3_to_ppm, relative_humidity
from .rewards import ConstraintSet

_DPI = 120


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def rollout_figure(
    results: Sequence[StepResult],
    constraints: ConstraintSet,
    dt: float,
    path: str | Path,
) -> Path:
    """Climate trajectories against their admissible band, actuator
    activity and the running reward."""
    n = len(results)
    t = (np.arange(n) + 1) * dt / 86_400.0
    states = [r.info.state for r in results]
    t_air = np.array([s.t_air for s in states])
    co2 = np.array([co2_mgm3_to_ppm(s.co2_air, s.t_air) for s in states])
    rh = np.array([relative_humidity(s.vp_air, s.t_air) for s in states])
    cum_reward = np.cumsum([r.reward for r in results])

    fig, axes = plt.subplots(5, 1, figsize=(9, 11), sharex=True)
    for ax, series, label, ci in zip(
        axes[:3], (t_air, co2, rh), ("air temperature [degC]", "CO2 [ppm]", "RH [%]"), range(3)
    ):
        ax.plot(t, series, lw=1.0, color="tab:green")
        ax.axhline(constraints.y_min[ci], color="tab:red", ls="--", lw=0.8)
        ax.axhline(constraints.y_max[ci], color="tab:red", ls="--", lw=0.8)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)

    for j, name in ((0, "boiler"), (3, "vent"), (4, "lamp")):
        u = np.array([r.info.control.as_array()[j] for r in results]) / U_MAX[j]
        axes[3].plot(t, u, lw=0.9, label=name)
    axes[3].set_ylabel("actuators [0..1]")
    axes[3].set_ylim(-0.05, 1.05)
    axes[3].legend(loc="upper right", fontsize=8)
    axes[3].grid(alpha=0.3)

    axes[4].plot(t, cum_reward, lw=1.2, color="tab:blue")
    axes[4].set_ylabel("cumulative reward")
    axes[4].set_xlabel("time [days]")
    axes[4].grid(alpha=0.3)
    return _finish(fig, path)


def sweep_figure(
    agg_rows: Sequence[Dict[str, float | str]],
    path: str | Path,
) -> Path:
    """Mean episode reward and penalty against the uncertainty level, one
    line per controller, one std shaded."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    controllers = sorted({str(r["controller"]) for r in agg_rows})
    for c in controllers:
        rows = sorted((r for r in agg_rows if r["controller"] == c), key=lambda r: r["delta"])
        d = np.array([r["delta"] for r in rows], dtype=float)
        mr = np.array([r["mean_reward"] for r in rows], dtype=float)
        sr = np.array([r["std_reward"] for r in rows], dtype=float)
        mp = np.array([r["mean_penalty"] for r in rows], dtype=float)
        sp = np.array([r["std_penalty"] for r in rows], dtype=float)
        ax1.plot(d, mr, "o-", label=c)
        ax1.fill_between(d, mr - sr, mr + sr, alpha=0.2)
        ax2.plot(d, mp, "o-", label=c)
        ax2.fill_between(d, mp - sp, mp + sp, alpha=0.2)
    ax1.set_xlabel("parameter uncertainty delta")
    ax1.set_ylabel("episode reward")
    ax1.grid(alpha=0.3)
    ax1.legend(fontsize=8)
    ax2.set_xlabel("parameter uncertainty delta")
    ax2.set_ylabel("episode penalty")
    ax2.grid(alpha=0.3)
    return _finish(fig, path)


def learning_curve_figure(
    curve: Sequence[Tuple[int, float, float]], path: str | Path
) -> Path:
    it = [c[0] for c in curve]
    mean = [c[1] for c in curve]
    best = [c[2] for c in curve]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(it, mean, "o-", label="population mean")
    ax.plot(it, best, "s-", label="population max")
    ax.set_xlabel("iteration")
    ax.set_ylabel("episode return")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=9)
    return _finish(fig, path)
