"""Front-door session object driven by the CLI and the wire protocol.

A session binds one vehicle + scenario + water config to a live episode.
Frames are written as PPM/PGM files under a client-chosen session
directory (or returned base64-inline), keeping protocol responses small
and byte-reproducible. Episode logs (TUM ground truth + score CSV) are
flushed incrementally so external clients can compare against them.
"""
from __future__ import annotations

import base64
import dataclasses
import os
from dataclasses import dataclass

import numpy as np

from .camera import write_pgm16, write_ppm
from .config import (
    ConfigError,
    data_path,
    load_scenario_config,
    load_vehicle_config,
    load_water_config,
)
from .scenario import Action, EpisodeTerminated, PipeInspectionEnv
from .sensors import sample_depth, sample_distance, sample_gps, sample_imu
from .sim import Simulation


class SessionStateError(RuntimeError):
    """Operation requires a configured (and possibly reset) session."""


@dataclass
class SessionConfig:
    vehicle: str | os.PathLike
    scenario: str | os.PathLike
    water: str | os.PathLike
    seed: int = 0
    render: bool = True
    inline_frames: bool = False
    session_dir: str = "hydrosim_session"
    physics_dt: float | None = None  # override the vehicle config value
    control_period: float | None = None  # override the MPC period

    def __post_init__(self):
        if self.physics_dt is not None and not self.physics_dt > 0.0:
            raise ConfigError("session.physics_dt", f"must be positive, got {self.physics_dt}")
        if self.control_period is not None and not self.control_period > 0.0:
            raise ConfigError("session.control_period", f"must be positive, got {self.control_period}")

    @staticmethod
    def defaults(**overrides):
        base = dict(
            vehicle=str(data_path("bluerov2_heavy.json")),
            scenario=str(data_path("pipe20.json")),
            water=str(data_path("ocean_water.json")),
        )
        base.update(overrides)
        return SessionConfig(**base)


def _b64(write_fn, image) -> str:
    """Run a frame writer into a scratch file and return its bytes base64."""
    import tempfile

    with tempfile.NamedTemporaryFile(suffix=".img", delete=False) as tmp:
        name = tmp.name
    try:
        write_fn(name, image)
        with open(name, "rb") as f:
            return base64.b64encode(f.read()).decode("ascii")
    finally:
        os.unlink(name)


class Session:
    def __init__(self):
        self.config: SessionConfig | None = None
        self.env: PipeInspectionEnv | None = None
        self._frame_count = 0
        self._episode_count = 0
        self._tum_flushed = 0
        self._csv_flushed = 0

    # -- lifecycle ---------------------------------------------------------

    def configure(self, cfg: SessionConfig):
        vehicle = load_vehicle_config(cfg.vehicle)
        scenario = load_scenario_config(cfg.scenario)
        optics, intrinsics = load_water_config(cfg.water)
        scenario.seed = cfg.seed
        dt = cfg.physics_dt if cfg.physics_dt is not None else vehicle.physics_dt
        if cfg.control_period is not None:
            vehicle.mpc = dataclasses.replace(vehicle.mpc, period=cfg.control_period)
        if vehicle.mpc.period < dt:
            raise ConfigError("session.control_period",
                              f"control period {vehicle.mpc.period} below physics dt {dt}")
        sim = Simulation(
            dynamics=vehicle.dynamics,
            thrusters=vehicle.thrusters,
            water=vehicle.water,
            dt=dt,
            disturbance=vehicle.disturbance,
        )
        self.vehicle = vehicle
        self.env = PipeInspectionEnv(
            sim,
            scenario,
            vehicle.mpc,
            optics=optics,
            intrinsics=intrinsics,
            render=cfg.render,
        )
        self.config = cfg
        self._episode_count = 0
        os.makedirs(os.path.join(cfg.session_dir, "frames"), exist_ok=True)
        return {"session_dir": cfg.session_dir, "vehicle": vehicle.name,
                "n_thrusters": sim.n_thrusters}

    def _require_env(self) -> PipeInspectionEnv:
        if self.env is None or self.config is None:
            raise SessionStateError("session is not configured; send 'configure' first")
        return self.env

    def _require_episode(self) -> PipeInspectionEnv:
        env = self._require_env()
        if not env._active:
            raise SessionStateError("no active episode; send 'reset' first")
        return env

    def reset(self, seed: int | None = None):
        env = self._require_env()
        if seed is not None:
            env.scenario.seed = int(seed)
        self.vehicle.sensors.reset(env.scenario.seed)
        frame = env.reset()
        self._episode_count += 1
        self._frame_count = 0
        self._tum_flushed = 0
        self._csv_flushed = 0
        self._init_logs()
        self._flush_logs()
        payload = {"state": self._state_payload(), "status": env.status.as_dict()}
        payload.update(self._frame_payload(frame))
        return payload

    # -- stepping ----------------------------------------------------------

    def step_action(self, a1: float, a2: float):
        env = self._require_episode()
        try:
            frame, reward, status, info = env.step(Action(a1=a1, a2=a2))
        except EpisodeTerminated as exc:
            raise SessionStateError(str(exc))
        self._flush_logs()
        payload = {
            "reward": reward,
            "status": status.as_dict(),
            "state": self._state_payload(),
            "info": info,
        }
        payload.update(self._frame_payload(frame))
        return payload

    def step_thrusters(self, u):
        env = self._require_env()
        u = np.asarray(u, dtype=float)
        n = env.sim.n_thrusters
        if u.shape != (n,):
            raise ValueError(f"expected {n} thruster commands, got shape {u.shape}")
        env.sim.advance_thrusters(np.clip(u, -1.0, 1.0), env._steps_per_control)
        return {"state": self._state_payload()}

    def observe(self):
        env = self._require_env()
        payload = {"state": self._state_payload(), "sensors": self._sensor_payload()}
        if env._active:
            e_p, e_psi, arc = env.metrics()
            payload["info"] = {"e_p": e_p, "e_psi": e_psi, "arc_progress": arc}
            payload["status"] = env.status.as_dict()
        payload.update(self._frame_payload(env._observe()))
        return payload

    # -- payload helpers ----------------------------------------------------

    def _state_payload(self):
        st = self._require_env().sim.state
        return {"eta": list(st.eta), "nu": list(st.nu), "t": st.t}

    def _sensor_payload(self):
        env = self._require_env()
        suite = self.vehicle.sensors
        imu = sample_imu(env.sim.state, env.sim.acceleration_now(),
                         suite.imu_accel, suite.imu_gyro, suite.rng("imu_accel"))
        depth = sample_depth(env.sim.state, suite.depth, suite.rng("depth"))
        distance = sample_distance(env.sim.state, env.scene, suite.distance_max_range,
                                   suite.distance, suite.rng("distance"))
        gps, gps_valid = sample_gps(env.sim.state, suite.gps, suite.rng("gps"))
        return {
            "imu": {
                "specific_force": list(imu.specific_force),
                "angular_rate": list(imu.angular_rate),
                "t": imu.timestamp,
            },
            "depth": depth,
            "distance": distance,
            "gps": {"position": [None if np.isnan(v) else v for v in gps], "valid": gps_valid},
        }

    def _frame_payload(self, frame):
        if frame is None:
            return {}
        cfg = self.config
        if cfg.inline_frames:
            return {
                "frame": {
                    "rgb_ppm_b64": _b64(write_ppm, frame.rgb),
                    "depth_pgm_b64": _b64(write_pgm16, frame.depth),
                    "t": frame.timestamp,
                }
            }
        stem = f"ep{self._episode_count:03d}_frame{self._frame_count:05d}"
        rgb_path = os.path.join(cfg.session_dir, "frames", stem + ".ppm")
        depth_path = os.path.join(cfg.session_dir, "frames", stem + ".pgm")
        write_ppm(rgb_path, frame.rgb)
        write_pgm16(depth_path, frame.depth)
        self._frame_count += 1
        return {"frame": {"rgb": rgb_path, "depth": depth_path, "t": frame.timestamp}}

    # -- episode logs --------------------------------------------------------

    def log_paths(self):
        cfg = self.config
        stem = f"ep{self._episode_count:03d}"
        return (os.path.join(cfg.session_dir, stem + "_gt.tum"),
                os.path.join(cfg.session_dir, stem + "_scores.csv"))

    def _init_logs(self):
        tum_path, csv_path = self.log_paths()
        with open(tum_path, "w") as f:
            f.write("# timestamp tx ty tz qx qy qz qw\n")
        with open(csv_path, "w") as f:
            f.write("step,e_p,e_psi,reward\n")

    def _flush_logs(self):
        env = self.env
        tum_path, csv_path = self.log_paths()
        rows = env.trajectory_rows[self._tum_flushed:]
        if rows:
            with open(tum_path, "a") as f:
                for row in rows:
                    t, x, y, z, qx, qy, qz, qw = row
                    f.write(f"{t:.9f} {x:.9f} {y:.9f} {z:.9f} {qx:.9f} {qy:.9f} {qz:.9f} {qw:.9f}\n")
            self._tum_flushed = len(env.trajectory_rows)
        scores = env.score_rows[self._csv_flushed:]
        if scores:
            with open(csv_path, "a") as f:
                for step, e_p, e_psi, r in scores:
                    f.write(f"{step},{e_p!r},{e_psi!r},{r!r}\n")
            self._csv_flushed = len(env.score_rows)
