/**
 * Typed environment handle over the {@link Bridge} transport.
 *
 * Mirrors the native reset/step contract: `reset(seed)` returns the
 * first observation, `step(action)` returns the standard 5-tuple of
 * observation, reward, terminated, truncated, and info. Action vectors
 * are the six actuator commands in order: boiler heat [W/m2], CO2
 * injection [mg/m2/s], thermal screen [0..1], roof vent [0..1], lamp
 * power [W/m2], blackout screen [0..1]. Out-of-range commands are
 * clamped by the environment; `info.control` reports what was applied.
 *
 * @example
 * const bridge = await Bridge.spawn();
 * const env = await GreenhouseEnv.create(bridge, {
 *   configYaml: "episode_days: 1.0\nuncertainty:\n  delta: 0.1\n",
 * });
 * let obs = await env.reset(7);
 * while (true) {
 *   const r = await env.step([50, 1, 0.5, 0.25, 80, 0]);
 *   obs = r.observation;
 *   if (r.truncated) break;
 * }
 * await env.close();
 * await bridge.shutdown();
 */

import type { Bridge } from "./bridge.js";

/** Constraint-violation penalties by channel, each in [0, 1]. */
export type RewardPenalties = {
  t_air: number;
  co2: number;
  rh: number;
};

/**
 * Per-step reward components. `total` is exactly
 * `epi_scaled - (penalties.t_air + penalties.co2 + penalties.rh)`.
 */
export interface RewardBreakdown {
  /** Operational profit for the step [EUR/m2]: revenue minus costs. */
  epi_raw: number;
  /** Profit scaled to [0, 1] between the step's worst and best case. */
  epi_scaled: number;
  penalties: RewardPenalties;
  total: number;
}

/** Model state after the step. */
export type StateFields = {
  /** Indoor air temperature [degC]. */
  t_air: number;
  /** Heating pipe temperature [degC]. */
  t_pipe: number;
  /** Indoor CO2 concentration [mg/m3]. */
  co2_air: number;
  /** Indoor vapor pressure [Pa]. */
  vp_air: number;
  /** 24 h low-pass canopy temperature [degC]. */
  t_can24: number;
  /** Accumulated development temperature [degC day]. */
  t_can_sum: number;
  /** Fruit dry weight on the plant [kg/m2]. */
  w_fruit: number;
  /** Cumulative harvested dry weight [kg/m2]. */
  w_harvest: number;
};

/** Actuator commands actually applied (after clamping). */
export type ControlFields = {
  u_boil: number;
  u_co2: number;
  u_thscr: number;
  u_vent: number;
  u_lamp: number;
  u_blscr: number;
};

/** Outdoor weather held constant over the step. */
export type DisturbanceFields = {
  i_glob: number;
  t_out: number;
  rh_out: number;
  co2_out: number;
  wind: number;
};

/** Diagnostic payload attached to every step result. */
export interface StepInfo {
  reward: RewardBreakdown;
  state: StateFields;
  control: ControlFields;
  disturbance: DisturbanceFields;
  /** Active parameter multiplier per randomized parameter name. */
  multipliers: Record<string, number>;
}

/** The standard 5-tuple step result. */
export interface StepResult {
  observation: number[];
  reward: number;
  terminated: boolean;
  truncated: boolean;
  info: StepInfo;
}

/**
 * Environment configuration for {@link GreenhouseEnv.create}: either
 * the YAML document text the CLI accepts, or the equivalent mapping as
 * a plain object.
 */
export type EnvConfigInput =
  | { configYaml: string; configJson?: undefined }
  | { configJson: Record<string, unknown>; configYaml?: undefined };

/**
 * One environment instance living in the server process. Create with
 * {@link GreenhouseEnv.create}; handles are independent, so several can
 * share one bridge and step concurrently without coupling.
 */
export class GreenhouseEnv {
  readonly handle: string;
  /** Steps per episode; step N truncates the episode. */
  readonly episodeSteps: number;
  /** Control interval [s]. */
  readonly dt: number;
  /** Name of each observation component, in vector order. */
  readonly observationLabels: readonly string[];

  private constructor(
    private readonly bridge: Bridge,
    handle: string,
    episodeSteps: number,
    dt: number,
    observationLabels: readonly string[],
  ) {
    this.handle = handle;
    this.episodeSteps = episodeSteps;
    this.dt = dt;
    this.observationLabels = observationLabels;
  }

  /**
   * Allocate a native environment. Configuration errors reject with
   * the native diagnostic text.
   */
  static async create(bridge: Bridge, config: EnvConfigInput): Promise<GreenhouseEnv> {
    const body: Record<string, unknown> = { op: "create" };
    if (config.configYaml !== undefined) {
      body.config_yaml = config.configYaml;
    } else {
      body.config_json = config.configJson;
    }
    const reply = await bridge.request(body);
    return new GreenhouseEnv(
      bridge,
      reply.handle as string,
      reply.episode_steps as number,
      reply.dt as number,
      reply.observation_labels as string[],
    );
  }

  /**
   * Start a new episode and return its first observation. With a seed
   * the episode is fully reproducible; without one the server draws
   * fresh entropy.
   */
  async reset(seed?: number): Promise<number[]> {
    const body: Record<string, unknown> = { op: "reset", handle: this.handle };
    if (seed !== undefined) {
      body.seed = seed;
    }
    const reply = await this.bridge.request(body);
    return reply.observation as number[];
  }

  /**
   * Advance one control interval. Rejects with the native diagnostic
   * if the episode is already truncated or the action is malformed.
   */
  async step(action: readonly number[]): Promise<StepResult> {
    const reply = await this.bridge.request({
      op: "step",
      handle: this.handle,
      action: [...action],
    });
    return {
      observation: reply.observation as number[],
      reward: reply.reward as number,
      terminated: reply.terminated as boolean,
      truncated: reply.truncated as boolean,
      info: reply.info as unknown as StepInfo,
    };
  }

  /** Release the native environment. Later operations on this handle fail cleanly. */
  async close(): Promise<void> {
    await this.bridge.request({ op: "close", handle: this.handle });
  }
}
