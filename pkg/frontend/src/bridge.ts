/**
 * Child-process transport for the greenhouse environment server.
 *
 * Spawns `ghbench serve` and speaks its protocol: one JSON request per
 * line on stdin, one JSON reply per line on stdout. Every request is
 * tagged with a unique `id`, which the server echoes in the matching
 * reply, so several environment handles can share one transport without
 * replies getting crossed. Numeric payloads are JSON float64 literals
 * in shortest-round-trip form, so every value arrives bit-exact.
 *
 * @example
 * const bridge = await Bridge.spawn();
 * const reply = await bridge.request({ op: "create", config_yaml: "episode_days: 1.0" });
 * console.log(reply.handle, reply.episode_steps);
 * await bridge.shutdown();
 */

import { spawn } from "node:child_process";
import type { ChildProcessByStdio } from "node:child_process";
import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

/** How to launch and talk to the server process. */
export interface BridgeOptions {
  /**
   * Executable and arguments for the server process.
   * Defaults to `["ghbench", "serve"]`, resolved on PATH.
   */
  command?: readonly string[];
  /** Working directory for the server process. */
  cwd?: string;
  /** Extra environment variables for the server process. */
  env?: Record<string, string>;
}

/** A reply from the server; fields beyond `ok` depend on the request. */
export interface BridgeReply {
  ok: boolean;
  error?: string;
  id?: number;
  [key: string]: unknown;
}

/**
 * Error raised when a request fails. For server-side failures the
 * message is the native diagnostic text, verbatim.
 */
export class BridgeError extends Error {
  override name = "BridgeError";
}

interface Pending {
  resolve: (reply: BridgeReply) => void;
  reject: (error: Error) => void;
}

const STDERR_TAIL_CHARS = 4096;

/**
 * One running server process. Create with {@link Bridge.spawn}, release
 * with {@link Bridge.shutdown} (or {@link Bridge.terminate} on error
 * paths). All requests are asynchronous; replies resolve in the order
 * the server produces them, matched by id.
 */
export class Bridge {
  private readonly child: ChildProcessByStdio<Writable, Readable, Readable>;
  private readonly pending = new Map<number, Pending>();
  private nextId = 1;
  private stderrTail = "";
  private exited = false;
  private exitCode: number | null = null;

  private constructor(child: ChildProcessByStdio<Writable, Readable, Readable>) {
    this.child = child;

    child.stderr.setEncoding("utf8");
    child.stderr.on("data", (chunk: string) => {
      this.stderrTail = (this.stderrTail + chunk).slice(-STDERR_TAIL_CHARS);
    });

    const lines = createInterface({ input: child.stdout });
    lines.on("line", (line) => this.onLine(line));

    child.on("close", (code) => {
      this.exited = true;
      this.exitCode = code;
      this.rejectAll(this.exitError());
    });
  }

  /**
   * Launch the server process. Resolves once the process has started;
   * rejects if the executable cannot be spawned.
   */
  static spawn(options: BridgeOptions = {}): Promise<Bridge> {
    const command = options.command ?? ["ghbench", "serve"];
    if (command.length === 0) {
      throw new BridgeError("command must not be empty");
    }
    const child = spawn(command[0], command.slice(1), {
      cwd: options.cwd,
      env: options.env ? { ...process.env, ...options.env } : process.env,
      stdio: ["pipe", "pipe", "pipe"],
    });
    return new Promise((resolve, reject) => {
      child.once("spawn", () => {
        child.removeAllListeners("error");
        const bridge = new Bridge(child);
        child.on("error", () => bridge.rejectAll(bridge.exitError()));
        resolve(bridge);
      });
      child.once("error", (error) => {
        reject(new BridgeError(`failed to start ${command.join(" ")}: ${error.message}`));
      });
    });
  }

  /** True once the server process has exited. */
  get closed(): boolean {
    return this.exited;
  }

  /**
   * Send one request and wait for its reply. Resolves with the reply
   * object when `ok` is true; rejects with a {@link BridgeError}
   * carrying the server's diagnostic text when `ok` is false.
   */
  request(body: Record<string, unknown>): Promise<BridgeReply> {
    if (this.exited) {
      return Promise.reject(this.exitError());
    }
    const id = this.nextId++;
    const line = JSON.stringify({ ...body, id });
    return new Promise((resolve, reject) => {
      this.pending.set(id, {
        resolve: (reply) => {
          if (reply.ok) {
            resolve(reply);
          } else {
            reject(new BridgeError(reply.error ?? "request failed"));
          }
        },
        reject,
      });
      this.child.stdin.write(line + "\n", (error) => {
        if (error) {
          this.pending.delete(id);
          reject(new BridgeError(`failed to write request: ${error.message}`));
        }
      });
    });
  }

  /**
   * Ask the server to exit and wait for the process to finish. Safe to
   * call more than once.
   */
  async shutdown(): Promise<void> {
    if (this.exited) {
      return;
    }
    await this.request({ op: "shutdown" });
    await new Promise<void>((resolve) => {
      if (this.exited) {
        resolve();
      } else {
        this.child.once("close", () => resolve());
      }
    });
  }

  /** Kill the server process immediately. For error-path cleanup. */
  terminate(): void {
    if (!this.exited) {
      this.child.kill("SIGKILL");
    }
  }

  private onLine(line: string): void {
    let reply: BridgeReply;
    try {
      reply = JSON.parse(line) as BridgeReply;
    } catch {
      this.rejectAll(new BridgeError(`unparseable reply from server: ${line}`));
      return;
    }
    if (typeof reply.id !== "number" || !this.pending.has(reply.id)) {
      this.rejectAll(new BridgeError(`reply with unknown id from server: ${line}`));
      return;
    }
    const entry = this.pending.get(reply.id)!;
    this.pending.delete(reply.id);
    entry.resolve(reply);
  }

  private rejectAll(error: Error): void {
    const waiting = [...this.pending.values()];
    this.pending.clear();
    for (const entry of waiting) {
      entry.reject(error);
    }
  }

  private exitError(): BridgeError {
    const code = this.exitCode === null ? "signal" : `code ${this.exitCode}`;
    const tail = this.stderrTail.trim();
    const detail = tail ? `; stderr: ${tail}` : "";
    return new BridgeError(`server process exited (${code})${detail}`);
  }
}
