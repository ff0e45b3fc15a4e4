"""Stdio JSON-lines bridge exposing environments to other languages.

Each request is one JSON object per line; each response echoes the
request ``id`` when present.  Ops:

    {"op": "create", "config_yaml": "..."}   or {"op": "create", "config_json": {...}}
        -> {"ok": true, "handle": "env-1", "episode_steps": N,
            "dt": 300.0, "observation_labels": [...]}
    {"op": "reset", "handle": h, "seed": 7}  -> {"ok": true, "observation": [...]}
    {"op": "step", "handle": h, "action": [6 floats]}
        -> {"ok": true, "observation": [...], "reward": r, "terminated": false,
            "truncated": b, "info": {...}}
    {"op": "close", "handle": h}             -> {"ok": true}
    {"op": "shutdown"}                       -> {"ok": true} and the loop ends

Errors come back as {"ok": false, "error": "..."}; the loop keeps
serving after any error.  Floats round-trip exactly: shortest-repr JSON
encoding preserves every binary64 value.
"""

from __future__ import annotations

import json
from typing import Dict, IO, Optional

import yaml

from .config import env_config_from_dict
from .env import GreenhouseEnv
from .errors import ConfigError, GreenhouseError


class _Session:
    def __init__(self) -> None:
        self.envs: Dict[str, GreenhouseEnv] = {}
        self._counter = 0

    def _env(self, req: dict) -> GreenhouseEnv:
        handle = req.get("handle")
        if not isinstance(handle, str) or handle not in self.envs:
            raise GreenhouseError(f"unknown handle: {handle!r}")
        return self.envs[handle]

    def handle_request(self, req: dict) -> dict:
        op = req.get("op")
        if op == "create":
            if "config_yaml" in req:
                doc = yaml.safe_load(req["config_yaml"])
                if doc is None:
                    doc = {}
                if not isinstance(doc, dict):
                    raise ConfigError("config_yaml must parse to a mapping")
            elif "config_json" in req:
                doc = req["config_json"]
                if not isinstance(doc, dict):
                    raise ConfigError("config_json must be an object")
            else:
                raise ConfigError("create needs config_yaml or config_json")
            env = GreenhouseEnv(env_config_from_dict(doc))
            self._counter += 1
            handle = f"env-{self._counter}"
            self.envs[handle] = env
            return {
                "ok": True,
                "handle": handle,
                "episode_steps": env.episode_steps,
                "dt": env.config.dt,
                "observation_labels": list(env.observation_labels),
            }
        if op == "reset":
            env = self._env(req)
            seed = req.get("seed")
            if seed is not None and not isinstance(seed, int):
                raise GreenhouseError(f"seed must be an integer, got {seed!r}")
            obs = env.reset(seed)
            return {"ok": True, "observation": [float(v) for v in obs]}
        if op == "step":
            env = self._env(req)
            action = req.get("action")
            if not isinstance(action, list) or len(action) != 6:
                raise GreenhouseError("action must be a list of 6 numbers")
            result = env.step([float(v) for v in action])
            return {
                "ok": True,
                "observation": [float(v) for v in result.observation],
                "reward": result.reward,
                "terminated": result.terminated,
                "truncated": result.truncated,
                "info": result.info.as_dict(),
            }
        if op == "close":
            handle = req.get("handle")
            if not isinstance(handle, str) or handle not in self.envs:
                raise GreenhouseError(f"unknown handle: {handle!r}")
            del self.envs[handle]
            return {"ok": True}
        if op == "shutdown":
            return {"ok": True, "shutdown": True}
        raise GreenhouseError(f"unknown op: {op!r}")


def serve_stdio(stdin: IO[str], stdout: IO[str]) -> None:
    """Serve requests until shutdown or end of input."""
    session = _Session()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        rid: Optional[object] = None
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise GreenhouseError("request must be a JSON object")
            rid = req.get("id")
            resp = session.handle_request(req)
        except (GreenhouseError, ValueError, TypeError, KeyError) as e:
            resp = {"ok": False, "error": str(e) or type(e).__name__}
        if rid is not None:
            resp["id"] = rid
        stdout.write(json.dumps(resp, separators=(",", ":")) + "\n")
        stdout.flush()
        if resp.get("shutdown"):
            break
