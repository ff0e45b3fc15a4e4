"""``ghbench``: command line front end.

Subcommands: rollout, speed, sweep, train, weather validate, serve.
Data outputs are JSON-lines or CSV; ``--plot`` additionally renders
figures next to them.  Exit code is 0 only when every operation
succeeded.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click
import numpy as np

from . import _kernels
from .config import load_cem_config, load_env_config
from .control import (
    CemConfig,
    RuleBasedController,
    cem_train,
    make_controller,
    rollout as run_rollout,
)
from .env import EnvConfig, GreenhouseEnv, episode_metrics
from .errors import GreenhouseError
from .weather import load_csv


@dataclass
class CliState:
    config_path: Optional[str] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    threads: int = 1

    def env_config(self) -> EnvConfig:
        if not self.config_path:
            return EnvConfig()
        return load_env_config(self.config_path)

    def base_seed(self, cfg: EnvConfig) -> int:
        return self.seed if self.seed is not None else cfg.seed


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Environment YAML configuration.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output file or prefix; stdout for rollout when omitted.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes for speed measurement.")
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], seed: Optional[int],
         out: Optional[str], threads: int) -> None:
    """Greenhouse crop production benchmark."""
    if threads < 1:
        raise click.UsageError("--threads must be >= 1")
    ctx.obj = CliState(config_path=config_path, seed=seed, out=out, threads=threads)


def _record(k: int, result) -> dict:
    info = result.info
    d = info.as_dict()
    return {
        "k": k,
        "x": d["state"],
        "u": d["control"],
        "d": d["disturbance"],
        "obs": [float(v) for v in result.observation],
        "reward": d["reward"],
        "multipliers": d["multipliers"],
        "truncated": result.truncated,
    }


@main.command("rollout")
@click.option("--controller", "controller_spec", default="rule_based", show_default=True,
              help="rule_based, constant:<v0,..,v5>, or policy:<path.json>.")
@click.option("--plot", is_flag=True, help="Render the trajectory figure next to --out.")
@click.pass_obj
def cmd_rollout(state: CliState, controller_spec: str, plot: bool) -> None:
    """Run one full episode and write a JSON-lines trajectory."""
    try:
        cfg = state.env_config()
        env = GreenhouseEnv(cfg)
        controller = make_controller(controller_spec, env)
        seed = state.base_seed(cfg)
        results = run_rollout(env, controller, seed=seed)
        metrics = episode_metrics(results)
    except GreenhouseError as e:
        raise click.ClickException(str(e)) from None

    lines = [json.dumps(_record(k, r), separators=(",", ":")) for k, r in enumerate(results)]
    summary = {
        "summary": {
            "steps": metrics.n_steps,
            "seed": seed,
            "controller": controller_spec,
            "cum_reward": metrics.cum_reward,
            "cum_epi_raw": metrics.cum_epi_raw,
            "cum_penalty": metrics.cum_penalty,
            "harvest_kg": results[-1].info.state.w_harvest,
        }
    }
    lines.append(json.dumps(summary, separators=(",", ":")))
    text = "\n".join(lines) + "\n"
    if state.out:
        Path(state.out).write_text(text)
    else:
        click.echo(text, nl=False)
    click.echo(
        f"rollout: {metrics.n_steps} steps, reward {metrics.cum_reward:.3f}, "
        f"penalty {metrics.cum_penalty:.3f}",
        err=True,
    )
    if plot:
        if not state.out:
            raise click.UsageError("--plot needs --out to place the figure")
        from .plots import rollout_figure

        fig_path = Path(state.out).with_suffix(".png")
        rollout_figure(results, cfg.constraints, cfg.dt, fig_path)
        click.echo(f"figure: {fig_path}", err=True)


def _speed_worker(args: Tuple[EnvConfig, int, int]) -> Tuple[int, float]:
    cfg, steps, seed = args
    _kernels.warm_up()
    env = GreenhouseEnv(cfg)
    controller = RuleBasedController()
    controller.reset()
    obs = env.reset(seed)
    # Warm every code path before the clock starts.
    for _ in range(10):
        obs = env.step(controller.act(env, obs)).observation
    done = 0
    t0 = time.perf_counter()
    while done < steps:
        if env.truncated:
            controller.reset()
            obs = env.reset(seed + done)
        obs = env.step(controller.act(env, obs)).observation
        done += 1
    elapsed = time.perf_counter() - t0
    return done, elapsed


@main.command("speed")
@click.option("--steps", type=int, default=100_000, show_default=True,
              help="Environment steps to time (>= 10000).")
@click.pass_obj
def cmd_speed(state: CliState, steps: int) -> None:
    """Measure environment step throughput with the rule-based controller."""
    if steps < 10_000:
        raise click.UsageError("--steps must be >= 10000 for a stable measurement")
    try:
        cfg = state.env_config()
        seed = state.base_seed(cfg)
        threads = state.threads
        if threads == 1:
            done, elapsed = _speed_worker((cfg, steps, seed))
            total, wall = done, elapsed
        else:
            share = [steps // threads] * threads
            share[0] += steps - sum(share)
            with ProcessPoolExecutor(max_workers=threads) as pool:
                parts = list(
                    pool.map(_speed_worker, [(cfg, s, seed + i) for i, s in enumerate(share)])
                )
            total = sum(p[0] for p in parts)
            wall = max(p[1] for p in parts)
    except GreenhouseError as e:
        raise click.ClickException(str(e)) from None
    report = {
        "steps": total,
        "threads": threads,
        "elapsed_s": wall,
        "steps_per_s": total / wall,
        "steps_per_s_per_core": total / wall / threads,
    }
    text = json.dumps(report, indent=2) + "\n"
    if state.out:
        Path(state.out).write_text(text)
    click.echo(text, nl=False)


@dataclass(frozen=True)
class SweepRun:
    controller: str
    delta: float
    run: int
    cum_reward: float
    cum_epi: float
    cum_penalty: float


@dataclass(frozen=True)
class SweepResult:
    """All per-run metrics of a sweep plus per-cell aggregates."""

    runs: Tuple[SweepRun, ...]
    aggregates: Tuple[Dict[str, object], ...]


def run_sweep(
    cfg: EnvConfig,
    controllers: Sequence[str],
    deltas: Sequence[float],
    n_runs: int,
    base_seed: int,
) -> SweepResult:
    if n_runs < 1:
        raise click.UsageError("--runs must be >= 1")
    runs: List[SweepRun] = []
    aggregates: List[Dict[str, object]] = []
    for spec in controllers:
        for delta in deltas:
            cell_cfg = dataclasses.replace(
                cfg, uncertainty=dataclasses.replace(cfg.uncertainty, delta=delta)
            )
            env = GreenhouseEnv(cell_cfg)
            rewards, epis, pens = [], [], []
            for i in range(n_runs):
                controller = make_controller(spec, env)
                results = run_rollout(env, controller, seed=base_seed + i)
                m = episode_metrics(results)
                runs.append(
                    SweepRun(spec, delta, i, m.cum_reward, m.cum_epi_raw, m.cum_penalty)
                )
                rewards.append(m.cum_reward)
                epis.append(m.cum_epi_raw)
                pens.append(m.cum_penalty)
            ar, ae, ap = np.array(rewards), np.array(epis), np.array(pens)
            aggregates.append(
                {
                    "controller": spec,
                    "delta": delta,
                    "runs": n_runs,
                    "mean_reward": float(ar.mean()),
                    "std_reward": float(ar.std()),
                    "mean_epi": float(ae.mean()),
                    "std_epi": float(ae.std()),
                    "mean_penalty": float(ap.mean()),
                    "std_penalty": float(ap.std()),
                }
            )
    return SweepResult(runs=tuple(runs), aggregates=tuple(aggregates))


def _fmt(v: object) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


@main.command("sweep")
@click.option("--deltas", default="0.0,0.05,0.1,0.2", show_default=True,
              help="Comma separated uncertainty levels.")
@click.option("--runs", "n_runs", type=int, default=5, show_default=True,
              help="Episodes per (controller, delta) cell.")
@click.option("--controllers", default="rule_based", show_default=True,
              help="Comma separated controller specs.")
@click.option("--plot", is_flag=True, help="Render the sweep figure next to the CSVs.")
@click.pass_obj
def cmd_sweep(state: CliState, deltas: str, n_runs: int, controllers: str, plot: bool) -> None:
    """Grid of episodes over uncertainty levels and controllers."""
    if not state.out:
        raise click.UsageError("sweep needs --out as a file prefix")
    try:
        parsed = [float(v) for v in deltas.split(",") if v != ""]
    except ValueError:
        raise click.UsageError(f"bad --deltas value: {deltas!r}") from None
    specs = [c.strip() for c in controllers.split(",") if c.strip()]
    if not parsed or not specs:
        raise click.UsageError("--deltas and --controllers must be non-empty")
    try:
        cfg = state.env_config()
        result = run_sweep(cfg, specs, parsed, n_runs, state.base_seed(cfg))
    except GreenhouseError as e:
        raise click.ClickException(str(e)) from None

    prefix = Path(state.out)
    runs_path = prefix.parent / (prefix.name + "_runs.csv")
    agg_path = prefix.parent / (prefix.name + "_agg.csv")
    with runs_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["controller", "delta", "run", "cum_reward", "cum_epi", "cum_penalty"])
        for r in result.runs:
            w.writerow(
                [r.controller, _fmt(r.delta), r.run, _fmt(r.cum_reward), _fmt(r.cum_epi),
                 _fmt(r.cum_penalty)]
            )
    agg_cols = ["controller", "delta", "runs", "mean_reward", "std_reward", "mean_epi",
                "std_epi", "mean_penalty", "std_penalty"]
    with agg_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(agg_cols)
        for row in result.aggregates:
            w.writerow([_fmt(row[c]) if c not in ("controller", "runs") else row[c]
                        for c in agg_cols])
    click.echo(f"sweep: {len(result.runs)} episodes -> {runs_path}, {agg_path}", err=True)
    if plot:
        from .plots import sweep_figure

        fig_path = prefix.parent / (prefix.name + ".png")
        sweep_figure(result.aggregates, fig_path)
        click.echo(f"figure: {fig_path}", err=True)


@main.command("train")
@click.option("--cem-config", "cem_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Trainer YAML; defaults apply when omitted.")
@click.option("--plot", is_flag=True, help="Render the learning curve figure.")
@click.pass_obj
def cmd_train(state: CliState, cem_path: Optional[str], plot: bool) -> None:
    """Cross-entropy training of the affine policy; writes the policy
    artifact and the learning curve."""
    if not state.out:
        raise click.UsageError("train needs --out as a file prefix")
    try:
        cfg = state.env_config()
        cem = load_cem_config(cem_path) if cem_path else CemConfig()
        if state.seed is not None:
            cem = dataclasses.replace(cem, seed=state.seed)

        def progress(it: int, mean: float, best: float) -> None:
            click.echo(f"iter {it}: mean {mean:.3f}, max {best:.3f}", err=True)

        result = cem_train(cfg, cem, progress=progress)
    except GreenhouseError as e:
        raise click.ClickException(str(e)) from None

    prefix = Path(state.out)
    policy_path = prefix.parent / (prefix.name + "_policy.json")
    curve_path = prefix.parent / (prefix.name + "_curve.csv")
    result.params.save(policy_path)
    with curve_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "mean_return", "max_return"])
        for it, mean, best in result.curve:
            w.writerow([it, repr(mean), repr(best)])
    click.echo(
        f"train: best return {result.best_return:.3f} -> {policy_path}, {curve_path}",
        err=True,
    )
    if plot:
        from .plots import learning_curve_figure

        fig_path = prefix.parent / (prefix.name + "_curve.png")
        learning_curve_figure(result.curve, fig_path)
        click.echo(f"figure: {fig_path}", err=True)


@main.group("weather")
def cmd_weather() -> None:
    """Weather file utilities."""


@cmd_weather.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def cmd_weather_validate(path: str) -> None:
    """Check a weather CSV; exit 0 only if it is fully valid."""
    try:
        series = load_csv(path)
    except GreenhouseError as e:
        raise click.ClickException(str(e)) from None
    click.echo(
        f"OK: {len(series)} rows at {series.dt:.0f} s covering {series.days:.2f} days, "
        f"start {series.time_at(0).isoformat()}"
    )


@main.command("serve")
def cmd_serve() -> None:
    """JSON-lines bridge over stdio for language bindings.

    One request per line; ops: create, reset, step, close, shutdown.
    """
    from .bridge import serve_stdio

    serve_stdio(sys.stdin, sys.stdout)


if __name__ == "__main__":
    main()
