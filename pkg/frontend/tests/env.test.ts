import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Bridge, BridgeError, GreenhouseEnv } from "../src/index.js";
import {
  DAYS_3_STEPS,
  DAYS_72_STEPS,
  expectIdenticalVector,
} from "./helpers.js";

const BASE_CONFIG = {
  episode_days: DAYS_72_STEPS,
  uncertainty: { delta: 0.1, resample_mode: "per_step" },
};

const ACTION = [50.0, 1.0, 0.5, 0.25, 80.0, 0.0];

let bridge: Bridge;

beforeAll(async () => {
  bridge = await Bridge.spawn();
});

afterAll(async () => {
  await bridge.shutdown();
});

describe("handle lifecycle", () => {
  it("creates a live handle and close releases it", async () => {
    const env = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    expect(env.handle).toMatch(/^env-\d+$/);
    expect(env.episodeSteps).toBe(72);
    expect(env.dt).toBe(300.0);
    expect(env.observationLabels.length).toBeGreaterThan(0);
    expect(env.observationLabels).toContain("t_air");

    await env.reset(1);
    await env.step(ACTION);
    await env.close();

    await expect(env.step(ACTION)).rejects.toThrow(/unknown handle/);
  });

  it("rejects an out-of-range randomization width with the native diagnostic", async () => {
    const yaml = "episode_days: 1.0\nuncertainty:\n  delta: 1.2\n";
    const failure = GreenhouseEnv.create(bridge, { configYaml: yaml });
    await expect(failure).rejects.toBeInstanceOf(BridgeError);
    await expect(failure).rejects.toThrow(/uncertainty\/delta/);
  });

  it("rejects a step before the first reset", async () => {
    const env = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    await expect(env.step(ACTION)).rejects.toThrow(/reset/);
    await env.close();
  });
});

describe("handle independence", () => {
  it("two handles from one config run independent episodes", async () => {
    const a = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    const b = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });

    await a.reset(1);
    await b.reset(2);

    // Interleave the two episodes through the shared transport.
    const obsA: number[][] = [];
    const obsB: number[][] = [];
    for (let k = 0; k < 20; k++) {
      obsA.push((await a.step(ACTION)).observation);
      obsB.push((await b.step(ACTION)).observation);
    }

    // Different seeds draw different parameter multipliers, so the
    // trajectories must diverge.
    const anyDifference = obsA.some(
      (row, k) => !row.every((v, i) => Object.is(v, obsB[k][i])),
    );
    expect(anyDifference).toBe(true);

    // A fresh handle replaying seed 1 reproduces the first trajectory
    // exactly, so the interleaved episode leaked nothing into it.
    const c = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    await c.reset(1);
    for (let k = 0; k < 20; k++) {
      const r = await c.step(ACTION);
      expectIdenticalVector(r.observation, obsA[k], `replay obs[${k}]`);
    }

    await a.close();
    await b.close();
    await c.close();
  });
});

describe("episode end", () => {
  it("fails cleanly on a step after truncation and recovers on reset", async () => {
    const env = await GreenhouseEnv.create(bridge, {
      configJson: { episode_days: DAYS_3_STEPS },
    });
    await env.reset(3);
    expect(env.episodeSteps).toBe(3);

    expect((await env.step(ACTION)).truncated).toBe(false);
    expect((await env.step(ACTION)).truncated).toBe(false);
    expect((await env.step(ACTION)).truncated).toBe(true);

    await expect(env.step(ACTION)).rejects.toThrow(/truncated.*reset/);

    // The handle (and the server) survive the error.
    const obs = await env.reset(4);
    expect(obs.length).toBe(env.observationLabels.length);
    expect((await env.step(ACTION)).truncated).toBe(false);
    await env.close();
  });
});

describe("step payload", () => {
  it("exposes the reward breakdown fields by name", async () => {
    const env = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    await env.reset(7);
    const r = await env.step(ACTION);

    const breakdown = r.info.reward;
    expect(typeof breakdown.epi_raw).toBe("number");
    expect(typeof breakdown.epi_scaled).toBe("number");
    expect(typeof breakdown.total).toBe("number");
    for (const channel of ["t_air", "co2", "rh"] as const) {
      const p = breakdown.penalties[channel];
      expect(typeof p).toBe("number");
      expect(p).toBeGreaterThanOrEqual(0.0);
      expect(p).toBeLessThanOrEqual(1.0);
    }
    expect(breakdown.epi_scaled).toBeGreaterThanOrEqual(0.0);
    expect(breakdown.epi_scaled).toBeLessThanOrEqual(1.0);

    // The reward identity survives the boundary bit-exactly: the same
    // float64 arithmetic on the marshaled parts reproduces the total.
    const { t_air, co2, rh } = breakdown.penalties;
    expect(Object.is(breakdown.total, breakdown.epi_scaled - (t_air + co2 + rh))).toBe(true);
    expect(Object.is(r.reward, breakdown.total)).toBe(true);

    expect(r.terminated).toBe(false);
    await env.close();
  });

  it("names every state, control, and disturbance field", async () => {
    const env = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    await env.reset(8);
    const { info } = await env.step(ACTION);

    expect(Object.keys(info.state).sort()).toEqual(
      ["co2_air", "t_air", "t_can24", "t_can_sum", "t_pipe", "vp_air", "w_fruit", "w_harvest"],
    );
    expect(Object.keys(info.control).sort()).toEqual(
      ["u_blscr", "u_boil", "u_co2", "u_lamp", "u_thscr", "u_vent"],
    );
    expect(Object.keys(info.disturbance).sort()).toEqual(
      ["co2_out", "i_glob", "rh_out", "t_out", "wind"],
    );

    // delta = 0.1 bounds every active multiplier to [0.9, 1.1].
    const multipliers = Object.values(info.multipliers);
    expect(multipliers.length).toBeGreaterThan(0);
    for (const m of multipliers) {
      expect(m).toBeGreaterThanOrEqual(0.9);
      expect(m).toBeLessThanOrEqual(1.1);
    }
    await env.close();
  });

  it("round-trips action values bit-exactly into the applied control", async () => {
    const env = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    await env.reset(9);

    // Awkward float64 values, all strictly inside the actuator ranges,
    // so clamping leaves them untouched and the echo must match bitwise.
    const action = [
      80.00000000000001,
      0.30000000000000004,
      1e-17,
      0.1 + 0.2,
      115.99999999999999,
      0.9999999999999999,
    ];
    const { info } = await env.step(action);
    const applied = [
      info.control.u_boil,
      info.control.u_co2,
      info.control.u_thscr,
      info.control.u_vent,
      info.control.u_lamp,
      info.control.u_blscr,
    ];
    expectIdenticalVector(applied, action, "applied control");
    await env.close();
  });

  it("rejects a malformed action with the native text", async () => {
    const env = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    await env.reset(10);
    await expect(env.step([1, 2, 3])).rejects.toThrow(/6 numbers/);
    await env.close();
  });
});

describe("transport", () => {
  it("surfaces unknown operations as BridgeError", async () => {
    await expect(bridge.request({ op: "warp" })).rejects.toBeInstanceOf(BridgeError);
    await expect(bridge.request({ op: "warp" })).rejects.toThrow(/unknown op/);
  });

  it("keeps serving after an error reply", async () => {
    await expect(bridge.request({ op: "warp" })).rejects.toThrow();
    const env = await GreenhouseEnv.create(bridge, { configJson: BASE_CONFIG });
    const obs = await env.reset(11);
    expect(obs.length).toBe(env.observationLabels.length);
    await env.close();
  });
});
