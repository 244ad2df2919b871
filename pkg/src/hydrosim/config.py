"""JSON configuration loading with field-path error reporting.

Three file kinds: vehicle (rigid body, hydrodynamics, thruster table, MPC
block, sensors), scenario (pipe course and episode settings), and water
(optics plus camera intrinsics). Shipped defaults live in hydrosim/data.
"""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .camera import CameraIntrinsics, WaterOptics
from .dynamics import (
    ConfigurationError,
    DisturbanceModel,
    DynamicsParams,
    HydroParams,
    RigidBodyParams,
    SineComponent,
)
from .mpc import MpcConfig
from .scenario import PipeLayout, ScenarioConfig
from .sensors import SensorNoise, SensorSuite
from .thrusters import ThrusterSpec, WaterParams


class ConfigError(ValueError):
    """Invalid configuration; message carries the JSON field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.field_path = path


def data_path(name: str):
    """Path to a shipped default config file (e.g. 'bluerov2_heavy.json')."""
    return resources.files("hydrosim.data").joinpath(name)


def _load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(str(path), "file not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}")


def _get(d, key, path, required=True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    return d[key]


def _number(d, key, path, required=True, default=None, positive=False, non_negative=False):
    v = _get(d, key, path, required, default)
    if v is None:
        return v
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {type(v).__name__}")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}", f"must be positive, got {v}")
    if non_negative and v < 0:
        raise ConfigError(f"{path}.{key}", f"must be non-negative, got {v}")
    return float(v)


def _vector(d, key, path, length, required=True, default=None):
    v = _get(d, key, path, required, default)
    if v is None:
        return v
    arr = np.asarray(v, dtype=float)
    if arr.shape != (length,):
        raise ConfigError(f"{path}.{key}", f"expected {length} numbers, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{path}.{key}", "entries must be finite")
    return arr


class VehicleConfig:
    """Everything the session needs about one vehicle."""

    def __init__(self, name, dynamics, thrusters, water, mpc, sensors, physics_dt, disturbance):
        self.name = name
        self.dynamics: DynamicsParams = dynamics
        self.thrusters: list[ThrusterSpec] = thrusters
        self.water: WaterParams = water
        self.mpc: MpcConfig = mpc
        self.sensors: SensorSuite = sensors
        self.physics_dt: float = physics_dt
        self.disturbance: DisturbanceModel = disturbance


def _sensor_noise(d, path):
    if d is None:
        return SensorNoise()
    sigma = d.get("sigma", 0.0)
    bias = d.get("bias", 0.0)
    if np.any(np.asarray(sigma) < 0):
        raise ConfigError(f"{path}.sigma", "must be non-negative")
    return SensorNoise(
        sigma=np.asarray(sigma, dtype=float) if not np.isscalar(sigma) else float(sigma),
        bias=np.asarray(bias, dtype=float) if not np.isscalar(bias) else float(bias),
        rate=_number(d, "rate", path, required=False, default=100.0, positive=True),
        seed=int(d.get("seed", 0)),
    )


def load_vehicle_config(path) -> VehicleConfig:
    raw = _load_json(path)
    root = "vehicle"

    rb_raw = _get(raw, "rigid_body", root)
    rb_path = f"{root}.rigid_body"
    try:
        rigid = RigidBodyParams(
            mass=_number(rb_raw, "mass", rb_path, positive=True),
            inertia=_vector(rb_raw, "inertia_diag", rb_path, 3),
            r_g=_vector(rb_raw, "r_g", rb_path, 3, required=False, default=np.zeros(3)),
            r_b=_vector(rb_raw, "r_b", rb_path, 3, required=False, default=np.zeros(3)),
            weight=_number(rb_raw, "weight", rb_path, non_negative=True),
            buoyancy=_number(rb_raw, "buoyancy", rb_path, non_negative=True),
        )
    except ConfigurationError as exc:
        raise ConfigError(rb_path, str(exc))

    hy_raw = _get(raw, "hydrodynamics", root)
    hy_path = f"{root}.hydrodynamics"
    try:
        hydro = HydroParams(
            added_mass=_vector(hy_raw, "added_mass_diag", hy_path, 6),
            linear_damping=_vector(hy_raw, "linear_damping_diag", hy_path, 6),
            quad_damping=_vector(hy_raw, "quad_damping_diag", hy_path, 6),
        )
        dynamics = DynamicsParams(rigid, hydro)
    except ConfigurationError as exc:
        raise ConfigError(hy_path, str(exc))

    water = WaterParams(density=_number(_get(raw, "water", root, required=False, default={}),
                                        "density", f"{root}.water", required=False,
                                        default=1000.0, positive=True))

    thr_raw = _get(raw, "thrusters", root)
    if not isinstance(thr_raw, list) or not thr_raw:
        raise ConfigError(f"{root}.thrusters", "expected a non-empty list")
    thrusters = []
    for i, t in enumerate(thr_raw):
        t_path = f"{root}.thrusters[{i}]"
        try:
            thrusters.append(
                ThrusterSpec(
                    position=_vector(t, "position", t_path, 3),
                    direction=_vector(t, "direction", t_path, 3),
                    thrust_coeff=_number(t, "thrust_coeff", t_path, positive=True),
                    max_speed=_number(t, "max_speed", t_path, positive=True),
                    prop_diameter=_number(t, "prop_diameter", t_path, positive=True),
                    time_constant=_number(t, "time_constant", t_path, required=False,
                                          default=0.0, non_negative=True),
                )
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(t_path, str(exc))

    mpc_raw = _get(raw, "mpc", root, required=False, default={})
    mpc_path = f"{root}.mpc"
    try:
        kwargs = {}
        if "horizon" in mpc_raw:
            kwargs["horizon"] = int(mpc_raw["horizon"])
        if "period" in mpc_raw:
            kwargs["period"] = _number(mpc_raw, "period", mpc_path, positive=True)
        for key, attr in (
            ("pose_weight_diag", "pose_weight"),
            ("velocity_weight_diag", "velocity_weight"),
            ("input_weight_diag", "input_weight"),
        ):
            if key in mpc_raw:
                kwargs[attr] = np.diag(_vector(mpc_raw, key, mpc_path, 6))
        for key in ("tau_min", "tau_max", "fallback_gain"):
            if key in mpc_raw:
                kwargs[key] = _vector(mpc_raw, key, mpc_path, 6)
        mpc = MpcConfig(**kwargs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(mpc_path, str(exc))

    sensors_raw = _get(raw, "sensors", root, required=False, default={})
    sensors = SensorSuite(
        imu_accel=_sensor_noise(sensors_raw.get("imu_accel"), f"{root}.sensors.imu_accel"),
        imu_gyro=_sensor_noise(sensors_raw.get("imu_gyro"), f"{root}.sensors.imu_gyro"),
        depth=_sensor_noise(sensors_raw.get("depth"), f"{root}.sensors.depth"),
        distance=_sensor_noise(sensors_raw.get("distance"), f"{root}.sensors.distance"),
        gps=_sensor_noise(sensors_raw.get("gps"), f"{root}.sensors.gps"),
        distance_max_range=_number(sensors_raw, "distance_max_range", f"{root}.sensors",
                                   required=False, default=30.0, positive=True),
    )

    dist_raw = raw.get("disturbance")
    if dist_raw:
        d_path = f"{root}.disturbance"
        kind = _get(dist_raw, "kind", d_path)
        comps = []
        for i, c in enumerate(dist_raw.get("components", [])):
            c_path = f"{d_path}.components[{i}]"
            comps.append(
                SineComponent(
                    amplitude=_vector(c, "amplitude", c_path, 6),
                    frequency=_vector(c, "frequency", c_path, 6, required=False, default=np.zeros(6)),
                    phase=_vector(c, "phase", c_path, 6, required=False, default=np.zeros(6)),
                )
            )
        try:
            disturbance = DisturbanceModel(kind=kind, components=comps)
        except ConfigurationError as exc:
            raise ConfigError(d_path, str(exc))
    else:
        disturbance = DisturbanceModel.none()

    return VehicleConfig(
        name=raw.get("name", "vehicle"),
        dynamics=dynamics,
        thrusters=thrusters,
        water=water,
        mpc=mpc,
        sensors=sensors,
        physics_dt=_number(raw, "physics_dt", root, required=False, default=1e-3, positive=True),
        disturbance=disturbance,
    )


def load_scenario_config(path) -> ScenarioConfig:
    raw = _load_json(path)
    root = "scenario"
    wp = _get(raw, "pipe_waypoints", root)
    arr = np.asarray(wp, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 3:
        raise ConfigError(f"{root}.pipe_waypoints", f"expected an (n>=2, 3) array, got shape {arr.shape}")
    try:
        layout = PipeLayout(waypoints=arr, radius=_number(raw, "pipe_radius", root, positive=True))
        return ScenarioConfig(
            layout=layout,
            initial_pose=_vector(raw, "initial_pose", root, 6),
            altitude_above_pipe=_number(raw, "altitude_above_pipe", root, required=False,
                                        default=2.0, positive=True),
            seafloor_depth=_number(raw, "seafloor_depth", root, required=False, default=10.0),
            max_steps=int(_number(raw, "max_steps", root, required=False, default=60, positive=True)),
            goal_tolerance=_number(raw, "goal_tolerance", root, required=False, default=0.5,
                                   non_negative=True),
            seed=int(raw.get("seed", 0)),
            waypoint_tolerance=_number(raw, "waypoint_tolerance", root, required=False,
                                       default=0.1, positive=True),
            inner_timeout=_number(raw, "inner_timeout", root, required=False, default=10.0,
                                  positive=True),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(root, str(exc))


def load_water_config(path):
    """(WaterOptics, CameraIntrinsics) from a water/render config file."""
    raw = _load_json(path)
    root = "water_optics"
    try:
        optics = WaterOptics(
            attenuation=_vector(raw, "attenuation", root, 3, required=False,
                                default=np.array([0.45, 0.12, 0.08])),
            veiling_light=_vector(raw, "veiling_light", root, 3, required=False,
                                  default=np.array([0.02, 0.25, 0.35])),
            forward_blur=_number(raw, "forward_blur", root, required=False, default=0.0,
                                 non_negative=True),
            forward_weight=_number(raw, "forward_weight", root, required=False, default=0.2,
                                   non_negative=True),
            schlick_k=_number(raw, "schlick_k", root, required=False, default=0.7),
            schlick_modulation=bool(raw.get("schlick_modulation", False)),
        )
        cam_raw = raw.get("camera", {})
        cam_path = f"{root}.camera"
        intrinsics = CameraIntrinsics(
            width=int(_number(cam_raw, "width", cam_path, required=False, default=320, positive=True)),
            height=int(_number(cam_raw, "height", cam_path, required=False, default=180, positive=True)),
            hfov=_number(cam_raw, "hfov", cam_path, required=False,
                         default=float(np.deg2rad(90.0)), positive=True),
            mount_position=_vector(cam_raw, "mount_position", cam_path, 3, required=False,
                                   default=np.zeros(3)),
            mount_rpy=_vector(cam_raw, "mount_rpy", cam_path, 3, required=False,
                              default=np.array([0.0, 0.0, np.pi / 2])),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(root, str(exc))
    return optics, intrinsics


def validate_files(vehicle=None, scenario=None, water=None, scene=None):
    """Validate any of the given config files; raises ConfigError on the
    first problem. Returns a dict of the loaded objects."""
    out = {}
    if vehicle is not None:
        out["vehicle"] = load_vehicle_config(vehicle)
    if scenario is not None:
        out["scenario"] = load_scenario_config(scenario)
    if water is not None:
        out["water"] = load_water_config(water)
    if scene is not None:
        from .scene import load_scene

        try:
            out["scene"] = load_scene(scene)
        except ValueError as exc:
            raise ConfigError("scene", str(exc))
    return out
