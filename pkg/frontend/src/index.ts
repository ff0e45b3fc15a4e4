/**
 * Node.js bindings for the greenhouse crop-production benchmark.
 *
 * The native environment runs in a `ghbench serve` child process; this
 * package wraps it in a typed reset/step interface. All numeric values
 * cross the process boundary bit-exact (float64 via shortest-round-trip
 * JSON), so trajectories match native rollouts digit for digit.
 *
 * @example
 * import { Bridge, GreenhouseEnv } from "greenhouse-bench-bindings";
 *
 * const bridge = await Bridge.spawn();
 * const env = await GreenhouseEnv.create(bridge, { configYaml: "episode_days: 1.0" });
 * const first = await env.reset(42);
 * const { observation, reward, truncated, info } = await env.step([50, 1, 0, 0, 80, 0]);
 * console.log(reward, info.reward.penalties);
 * await env.close();
 * await bridge.shutdown();
 */

export { Bridge, BridgeError } from "./bridge.js";
export type { BridgeOptions, BridgeReply } from "./bridge.js";
export { GreenhouseEnv } from "./env.js";
export type {
  ControlFields,
  DisturbanceFields,
  EnvConfigInput,
  RewardBreakdown,
  RewardPenalties,
  StateFields,
  StepInfo,
  StepResult,
} from "./env.js";
