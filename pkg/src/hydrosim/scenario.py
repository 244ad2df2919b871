"""Pipe-inspection episodes: world geometry, rewards, termination, and a
scripted pure-pursuit follower used as the baseline closed-loop agent.

An episode advances in agent decision steps. Each step converts the
2-vector action into a waypoint one meter away (direction offset a1 * 90
deg, heading offset a2 * 90 deg), lets the MPC track it at the control
rate until settled or an inner timeout expires, then scores the new state
against the pipe centerline:

    reward = 10 - 2 * e_p^2 - 2 * e_psi

with cross-track distance e_p (horizontal plane) and absolute heading
error e_psi. Crossing e_p > 2.5 m terminates the episode (pipe lost).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraIntrinsics, RenderedFrame, WaterOptics, capture
from .dynamics import VehicleState
from .geom import euler_to_quat, wrap_angle
from .mpc import MpcConfig, Reference, control_step
from .scene import Scene, pipe_scene
from .sim import Simulation

PIPE_LOST_DISTANCE = 2.5  # m, episode termination threshold
ACTION_STEP_LENGTH = 1.0  # m, waypoint distance per decision
ACTION_ANGLE_SCALE = np.pi / 2  # rad, full-scale direction/heading offset


@dataclass
class PipeLayout:
    """Pipe centerline polyline (n, 3) plus radius."""

    waypoints: np.ndarray
    radius: float = 0.3

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        if self.waypoints.ndim != 2 or self.waypoints.shape[0] < 2 or self.waypoints.shape[1] != 3:
            raise ValueError("waypoints must be an (n>=2, 3) array")
        seg = np.diff(self.waypoints, axis=0)
        self._seg_len = np.linalg.norm(seg, axis=1)
        if np.any(self._seg_len < 1e-9):
            raise ValueError("consecutive waypoints must be distinct")
        if not self.radius > 0.0:
            raise ValueError("pipe radius must be positive")
        self._seg_dir = seg / self._seg_len[:, None]
        self._cum_len = np.concatenate([[0.0], np.cumsum(self._seg_len)])

    @property
    def total_length(self) -> float:
        return float(self._cum_len[-1])

    def point_at(self, arc: float) -> np.ndarray:
        """Centerline point at clamped arclength."""
        arc = np.clip(arc, 0.0, self.total_length)
        i = min(int(np.searchsorted(self._cum_len, arc, side="right")) - 1, len(self._seg_len) - 1)
        return self.waypoints[i] + (arc - self._cum_len[i]) * self._seg_dir[i]


def pipe_cross_track(position, layout: PipeLayout):
    """(e_p, pipe_direction, arc_progress) for a query position.

    e_p is the horizontal-plane distance to the closest point of the
    polyline; pipe_direction is the unit direction of the segment owning
    that closest point; arc_progress its arclength from the start.
    """
    p = np.asarray(position, dtype=float)[:2]
    best = (np.inf, 0, 0.0)  # (distance, segment index, along-segment fraction)
    for i, (a, d, L) in enumerate(zip(layout.waypoints[:-1, :2], layout._seg_dir[:, :2], layout._seg_len)):
        dh = d * L  # horizontal segment vector (not unit if the pipe slopes)
        denom = dh @ dh
        s = float(np.clip((p - a) @ dh / denom, 0.0, 1.0)) if denom > 1e-18 else 0.0
        dist = float(np.linalg.norm(p - (a + s * dh)))
        if dist < best[0]:
            best = (dist, i, s)
    dist, i, s = best
    return dist, layout._seg_dir[i].copy(), float(layout._cum_len[i] + s * layout._seg_len[i])


def heading_error(psi: float, pipe_direction) -> float:
    """|shortest angle| between vehicle yaw and the pipe bearing, in [0, pi]."""
    bearing = np.arctan2(pipe_direction[1], pipe_direction[0])
    return abs(wrap_angle(psi - bearing))


def reward(e_p: float, e_psi: float) -> float:
    return 10.0 - 2.0 * e_p**2 - 2.0 * e_psi


@dataclass
class EpisodeStatus:
    step: int = 0
    cumulative_reward: float = 0.0
    terminated: bool = False
    reason: str | None = None  # pipe_lost | max_steps | goal_reached

    def as_dict(self):
        return {
            "step": self.step,
            "cumulative_reward": self.cumulative_reward,
            "terminated": self.terminated,
            "reason": self.reason,
        }


def check_termination(e_p: float, arc_progress: float, step: int, max_steps: int,
                      layout: PipeLayout, goal_tolerance: float = 0.5):
    """(terminated, reason) after an agent step."""
    if e_p > PIPE_LOST_DISTANCE:
        return True, "pipe_lost"
    if arc_progress >= layout.total_length - goal_tolerance:
        return True, "goal_reached"
    if step >= max_steps:
        return True, "max_steps"
    return False, None


@dataclass
class Action:
    a1: float = 0.0  # direction of the 1 m position step, +-90 deg full scale
    a2: float = 0.0  # heading turn, +-90 deg full scale

    def __post_init__(self):
        self.a1 = float(np.clip(self.a1, -1.0, 1.0))
        self.a2 = float(np.clip(self.a2, -1.0, 1.0))


def apply_action(state: VehicleState, action: Action, target_depth: float) -> Reference:
    """Waypoint reference one meter away; depth held at the configured
    altitude setpoint, roll/pitch level."""
    psi = state.eta[5]
    direction = psi + action.a1 * ACTION_ANGLE_SCALE
    pos = state.eta[:3] + ACTION_STEP_LENGTH * np.array([np.cos(direction), np.sin(direction), 0.0])
    pose = np.array([pos[0], pos[1], target_depth, 0.0, 0.0, wrap_angle(psi + action.a2 * ACTION_ANGLE_SCALE)])
    return Reference(pose=pose)


def scripted_follower(state: VehicleState, layout: PipeLayout, lookahead: float = 2.0) -> Action:
    """Pure pursuit on the centerline: steer the position step toward a
    lookahead point, align heading with the pipe direction."""
    _, pipe_dir, arc = pipe_cross_track(state.eta[:3], layout)
    target = layout.point_at(arc + lookahead)
    to_target = target[:2] - state.eta[:2]
    psi = state.eta[5]
    steer = wrap_angle(np.arctan2(to_target[1], to_target[0]) - psi)
    bearing = np.arctan2(pipe_dir[1], pipe_dir[0])
    turn = wrap_angle(bearing - psi)
    return Action(a1=steer / ACTION_ANGLE_SCALE, a2=turn / ACTION_ANGLE_SCALE)


@dataclass
class ScenarioConfig:
    layout: PipeLayout
    initial_pose: np.ndarray = field(default_factory=lambda: np.zeros(6))
    altitude_above_pipe: float = 2.0  # m above the pipe centerline
    seafloor_depth: float = 10.0  # m, NED z of the flat seafloor
    max_steps: int = 60
    goal_tolerance: float = 0.5
    seed: int = 0
    waypoint_tolerance: float = 0.1  # m, inner-loop settle radius
    inner_timeout: float = 10.0  # s, inner-loop cap per decision

    def __post_init__(self):
        self.initial_pose = np.asarray(self.initial_pose, dtype=float).reshape(6)

    def target_depth(self, arc: float = 0.0) -> float:
        z_pipe = self.layout.point_at(arc)[2]
        return z_pipe - self.altitude_above_pipe

    def build_scene(self) -> Scene:
        return pipe_scene(self.layout.waypoints, self.layout.radius, self.seafloor_depth)


class EpisodeTerminated(RuntimeError):
    pass


class PipeInspectionEnv:
    """Closed-loop episode: agent actions -> MPC waypoint tracking ->
    camera observation + reward. Logs ground truth poses (TUM rows at the
    control rate) and per-step scores."""

    def __init__(self, sim: Simulation, scenario: ScenarioConfig, mpc_cfg: MpcConfig,
                 scene: Scene | None = None, optics: WaterOptics | None = None,
                 intrinsics: CameraIntrinsics | None = None, render: bool = True):
        self.sim = sim
        self.scenario = scenario
        self.mpc_cfg = mpc_cfg
        self.scene = scene or scenario.build_scene()
        self.optics = optics or WaterOptics()
        self.intrinsics = intrinsics or CameraIntrinsics()
        self.render = render
        self._steps_per_control = max(1, int(round(mpc_cfg.period / sim.dt)))
        self.status = EpisodeStatus()
        self.trajectory_rows = []  # (t, x, y, z, qx, qy, qz, qw)
        self.score_rows = []  # (step, e_p, e_psi, reward)
        self._active = False

    def reset(self, seed: int | None = None):
        if seed is not None:
            self.scenario.seed = seed
        self.sim.reset(VehicleState(self.scenario.initial_pose.copy(), np.zeros(6), 0.0))
        self.status = EpisodeStatus()
        self.trajectory_rows = []
        self.score_rows = []
        self._active = True
        self._record_pose()
        return self._observe()

    def _record_pose(self):
        st = self.sim.state
        q = euler_to_quat(*st.eta[3:])
        self.trajectory_rows.append((st.t, *st.eta[:3], *q))

    def _observe(self) -> RenderedFrame | None:
        if not self.render:
            return None
        return capture(self.scene, self.optics, self.intrinsics, self.sim.state.eta,
                       timestamp=self.sim.state.t)

    def metrics(self):
        e_p, pipe_dir, arc = pipe_cross_track(self.sim.state.eta[:3], self.scenario.layout)
        e_psi = heading_error(self.sim.state.eta[5], pipe_dir)
        return e_p, e_psi, arc

    def step(self, action: Action):
        """Run one agent decision; returns (frame, reward, status, info)."""
        if not self._active or self.status.terminated:
            raise EpisodeTerminated("episode is terminated; call reset()")
        _, _, arc = self.metrics()
        ref = apply_action(self.sim.state, action, self.scenario.target_depth(arc))
        self._track_waypoint(ref)

        e_p, e_psi, arc = self.metrics()
        r = reward(e_p, e_psi)
        self.status.step += 1
        self.status.cumulative_reward += r
        terminated, reason = check_termination(
            e_p, arc, self.status.step, self.scenario.max_steps,
            self.scenario.layout, self.scenario.goal_tolerance,
        )
        self.status.terminated = terminated
        self.status.reason = reason
        self.score_rows.append((self.status.step, e_p, e_psi, r))
        info = {"e_p": e_p, "e_psi": e_psi, "arc_progress": arc}
        return self._observe(), r, self.status, info

    def _track_waypoint(self, ref: Reference):
        """Inner loop: 20 Hz MPC against 1 kHz physics until the waypoint is
        reached (position within tolerance) or the inner timeout expires."""
        t_start = self.sim.state.t
        while True:
            err = np.linalg.norm(self.sim.state.eta[:3] - ref.pose[:3])
            if err < self.scenario.waypoint_tolerance:
                break
            if self.sim.state.t - t_start >= self.scenario.inner_timeout:
                break
            u, _, _ = control_step(self.sim.state, ref, self.mpc_cfg, self.sim.dynamics,
                                   self.sim.thrusters, self.sim.water)
            self.sim.advance_thrusters(u, self._steps_per_control)
            self._record_pose()

    def write_logs(self, tum_path, csv_path):
        from .traj import Trajectory, write_tum

        rows = np.asarray(self.trajectory_rows)
        write_tum(Trajectory(rows[:, 0], rows[:, 1:4], rows[:, 4:8]), tum_path)
        with open(csv_path, "w") as f:
            f.write("step,e_p,e_psi,reward\n")
            for step, e_p, e_psi, r in self.score_rows:
                f.write(f"{step},{e_p!r},{e_psi!r},{r!r}\n")
