"""Seedable sensor models sampled from ground-truth simulator state.

All randomness comes from numpy's PCG64 generator, so a seed fully
determines every sample stream (documented for cross-language replay:
PCG64, one independent stream per sensor).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import euler_to_rotation

GRAVITY = 9.80665  # m/s^2, standard gravity, NED +z

# a GPS fix is only valid this close to the surface (antenna out of water)
GPS_MAX_DEPTH = 0.5


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class SensorNoise:
    """Additive Gaussian noise plus constant bias; sigma/bias broadcast
    over the sample shape."""

    sigma: np.ndarray | float = 0.0
    bias: np.ndarray | float = 0.0
    rate: float = 100.0  # Hz, informational
    seed: int = 0

    def __post_init__(self):
        if np.any(np.asarray(self.sigma) < 0.0):
            raise ValueError("sigma must be non-negative")
        if not self.rate > 0.0:
            raise ValueError("rate must be positive")

    def apply(self, truth, rng: np.random.Generator):
        truth = np.asarray(truth, dtype=float)
        out = truth + self.bias
        if np.any(np.asarray(self.sigma) > 0.0):
            out = out + rng.normal(0.0, self.sigma, size=truth.shape)
        return out


@dataclass
class ImuSample:
    specific_force: np.ndarray  # m/s^2, body frame
    angular_rate: np.ndarray  # rad/s, body frame
    timestamp: float


def sample_imu(state, nu_dot, accel_noise: SensorNoise, gyro_noise: SensorNoise,
               rng: np.random.Generator) -> ImuSample:
    """Accelerometer + gyro. The accelerometer reads specific force: the
    body-frame inertial acceleration (including the omega x v transport
    term) minus gravity resolved into the body frame, so at rest it
    reports (0, 0, -g)."""
    R = euler_to_rotation(*state.eta[3:])
    gravity_body = R.T @ np.array([0.0, 0.0, GRAVITY])
    accel_body = np.asarray(nu_dot, dtype=float)[:3] + np.cross(state.nu[3:], state.nu[:3])
    return ImuSample(
        specific_force=accel_noise.apply(accel_body - gravity_body, rng),
        angular_rate=gyro_noise.apply(state.nu[3:], rng),
        timestamp=state.t,
    )


def sample_depth(state, noise: SensorNoise, rng: np.random.Generator) -> float:
    """Pressure depth: NED z (positive down)."""
    return float(noise.apply(state.eta[2], rng))


def sample_distance(state, scene, max_range: float, noise: SensorNoise,
                    rng: np.random.Generator) -> float:
    """Single ray along body +z to the nearest scene surface, clamped to
    max_range (which doubles as the no-hit sentinel)."""
    from .scene import raycast  # local import; scene depends on geom only

    R = euler_to_rotation(*state.eta[3:])
    direction = R @ np.array([0.0, 0.0, 1.0])
    _, depth, _ = raycast(scene, state.eta[:3], direction[None, :])
    d = min(float(depth[0]), max_range)
    return float(noise.apply(d, rng))


def sample_gps(state, noise: SensorNoise, rng: np.random.Generator):
    """Surface-only NED position fix: (position, valid). Invalid (and
    truth-free) below GPS_MAX_DEPTH."""
    if state.eta[2] > GPS_MAX_DEPTH:
        return np.full(3, np.nan), False
    return noise.apply(state.eta[:3], rng), True


@dataclass
class SensorSuite:
    """Noise configs plus one PCG64 stream per sensor, reseeded on reset."""

    imu_accel: SensorNoise = field(default_factory=SensorNoise)
    imu_gyro: SensorNoise = field(default_factory=SensorNoise)
    depth: SensorNoise = field(default_factory=SensorNoise)
    distance: SensorNoise = field(default_factory=SensorNoise)
    gps: SensorNoise = field(default_factory=SensorNoise)
    distance_max_range: float = 30.0

    def __post_init__(self):
        self.reset(0)

    def reset(self, session_seed: int):
        self._rngs = {
            name: make_rng((session_seed * 1_000_003 + getattr(self, name).seed * 7919 + i) & 0x7FFFFFFF)
            for i, name in enumerate(("imu_accel", "imu_gyro", "depth", "distance", "gps"))
        }

    def rng(self, name: str) -> np.random.Generator:
        return self._rngs[name]
