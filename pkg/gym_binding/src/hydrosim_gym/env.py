"""Gym-style environment backed by a remote hydrosim session.

The binding is a thin protocol client: rewards, terminations, and
observations come from the server untouched (action clamping included), so
the environment is byte-for-byte consistent with the server's own episode
logs. Conforms to the modern 5-tuple step API with the terminated /
truncated split (pipe_lost and goal_reached terminate; max_steps
truncates).
"""
from __future__ import annotations

import base64
from dataclasses import dataclass, field

import numpy as np

from .client import ProtocolClient, ProtocolError

try:  # optional: real gymnasium spaces when the package is around
    from gymnasium import spaces as _gym_spaces
except ImportError:
    _gym_spaces = None

OBS_MODES = ("rgb", "rgb+depth", "state")


class EpisodeTerminatedError(RuntimeError):
    """step() called on a finished episode; call reset()."""


@dataclass
class EnvSpec:
    host: str = "127.0.0.1"
    port: int = 7777
    scenario: str | None = None  # server-side default when None
    vehicle: str | None = None
    water: str | None = None
    seed: int = 0
    observation_mode: str = "rgb"
    image_size: tuple = (320, 180)  # (width, height), must match server camera
    session_dir: str = "hydrosim_session"
    timeout: float = 60.0

    def __post_init__(self):
        if self.observation_mode not in OBS_MODES:
            raise ValueError(f"observation_mode must be one of {OBS_MODES}")


def _decode_ppm(data: bytes) -> np.ndarray:
    lines = data.split(b"\n", 3)
    if lines[0] != b"P6":
        raise ValueError("expected binary PPM frame")
    w, h = map(int, lines[1].split())
    maxval = int(lines[2])
    pixels = np.frombuffer(lines[3], dtype=np.uint8, count=w * h * 3)
    return pixels.reshape(h, w, 3).astype(np.float32) / maxval


def _decode_pgm16(data: bytes) -> np.ndarray:
    lines = data.split(b"\n", 3)
    if lines[0] != b"P5":
        raise ValueError("expected binary PGM depth frame")
    w, h = map(int, lines[1].split())
    no_hit = int(lines[2])
    raw = np.frombuffer(lines[3], dtype=">u2", count=w * h).reshape(h, w)
    depth = raw.astype(np.float32) / 1000.0
    depth[raw == no_hit] = np.inf
    return depth


class PipeFollowEnv:
    """Remote pipe-following environment.

    Actions are 2-vectors in [-1, 1]^2 (position-step direction, heading
    turn); they are transmitted raw and clamped server-side only.
    Observations follow EnvSpec.observation_mode:

      state      12-vector (pose eta, twist nu)
      rgb        (h, w, 3) float32 in [0, 1]
      rgb+depth  dict with "rgb" and "depth" arrays
    """

    metadata = {"render_modes": []}

    def __init__(self, spec: EnvSpec | None = None, **kwargs):
        self.spec = spec or EnvSpec(**kwargs)
        self.client: ProtocolClient | None = None
        self._terminated = True
        self._configured = False
        w, h = self.spec.image_size
        if _gym_spaces is not None:
            self.action_space = _gym_spaces.Box(-1.0, 1.0, shape=(2,), dtype=np.float32)
            if self.spec.observation_mode == "state":
                self.observation_space = _gym_spaces.Box(-np.inf, np.inf, shape=(12,), dtype=np.float64)
            else:
                self.observation_space = _gym_spaces.Box(0.0, 1.0, shape=(h, w, 3), dtype=np.float32)
        else:
            self.action_space = None
            self.observation_space = None

    # -- api -----------------------------------------------------------------

    def reset(self, seed: int | None = None, options=None):
        """(observation, info). Reconfigures on first use; seed defaults to
        the EnvSpec seed for deterministic episodes."""
        self._ensure_client()
        if not self._configured:
            cfg = {"seed": self.spec.seed,
                   "render": self.spec.observation_mode != "state",
                   "inline_frames": True,
                   "session_dir": self.spec.session_dir}
            for key in ("vehicle", "scenario", "water"):
                value = getattr(self.spec, key)
                if value is not None:
                    cfg[key] = value
            self.client.call("configure", **cfg)
            self._configured = True
        payload = self.client.call("reset", seed=self.spec.seed if seed is None else int(seed))
        self._terminated = False
        obs = self._observation(payload)
        return obs, {"t": payload["state"]["t"]}

    def step(self, action):
        """(observation, reward, terminated, truncated, info)."""
        if self.client is None or self._terminated:
            raise EpisodeTerminatedError("episode is over; call reset()")
        a = np.asarray(action, dtype=float).reshape(2)
        try:
            payload = self.client.call("step_action", action={"a1": float(a[0]), "a2": float(a[1])})
        except ProtocolError as exc:
            if exc.type == "state_error":
                raise EpisodeTerminatedError(str(exc)) from exc
            raise
        status = payload["status"]
        reason = status.get("reason")
        terminated = bool(status["terminated"]) and reason != "max_steps"
        truncated = bool(status["terminated"]) and reason == "max_steps"
        self._terminated = bool(status["terminated"])
        info = dict(payload["info"])
        info["reason"] = reason
        info["step"] = status["step"]
        return self._observation(payload), payload["reward"], terminated, truncated, info

    def close(self):
        if self.client is not None:
            try:
                self.client.call("shutdown")
            except (ProtocolError, ConnectionError):
                pass
            self.client.close()
            self.client = None
            self._configured = False

    # -- internals -------------------------------------------------------------

    def _ensure_client(self):
        if self.client is None:
            self.client = ProtocolClient(self.spec.host, self.spec.port,
                                         timeout=self.spec.timeout)
            self._configured = False

    def _observation(self, payload):
        if self.spec.observation_mode == "state":
            state = payload["state"]
            return np.asarray(state["eta"] + state["nu"], dtype=float)
        frame = payload.get("frame")
        if frame is None:
            raise ProtocolError({"type": "client_error",
                                 "message": "server sent no frame; was render disabled?"})
        rgb = _decode_ppm(base64.b64decode(frame["rgb_ppm_b64"]))
        if self.spec.observation_mode == "rgb":
            return rgb
        depth = _decode_pgm16(base64.b64decode(frame["depth_pgm_b64"]))
        return {"rgb": rgb, "depth": depth}
