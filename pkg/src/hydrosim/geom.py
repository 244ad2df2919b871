"""Frame conventions and rotation utilities shared across the simulator.

Conventions (SNAME / marine robotics):
  * world frame: NED, x north, y east, z down; gravity along +z.
  * body frame: x forward, y starboard, z down.
  * Euler angles (roll, pitch, yaw) compose as Z(yaw) @ Y(pitch) @ X(roll),
    giving the body-to-world rotation.
  * quaternions are stored (qx, qy, qz, qw), matching the TUM trajectory
    format; canonical form has qw >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

# |pitch -/+ pi/2| below this counts as gimbal proximity for Euler extraction
GIMBAL_EPS = 1e-6


def wrap_angle(a):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, TWO_PI) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.isscalar(a) or np.ndim(a) == 0 else w


def canonicalize_euler(roll, pitch, yaw):
    """Return the equivalent (roll, pitch, yaw) with pitch in [-pi/2, pi/2]
    and roll, yaw in (-pi, pi]. The rotation matrix is unchanged; canonical
    inputs are returned bit-identical."""
    if -np.pi < roll <= np.pi and -np.pi / 2 <= pitch <= np.pi / 2 and -np.pi < yaw <= np.pi:
        return float(roll), float(pitch), float(yaw)
    pitch = wrap_angle(pitch)
    if abs(pitch) > np.pi / 2:
        pitch = np.sign(pitch) * np.pi - pitch
        roll = roll + np.pi
        yaw = yaw + np.pi
    return wrap_angle(roll), pitch, wrap_angle(yaw)


def skew(v):
    """3x3 skew-symmetric matrix S(v) with S(v) @ w = v x w."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def euler_to_rotation(roll, pitch, yaw):
    """Body-to-world rotation from roll/pitch/yaw, Z-Y-X composition."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_to_euler(R):
    """Extract (roll, pitch, yaw) from a body-to-world rotation matrix."""
    pitch = np.arcsin(np.clip(-R[2, 0], -1.0, 1.0))
    roll = np.arctan2(R[2, 1], R[2, 2])
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return roll, pitch, yaw


def is_rotation(R, tol=1e-9):
    R = np.asarray(R)
    if R.shape != (3, 3):
        return False
    orth = np.max(np.abs(R.T @ R - np.eye(3)))
    return bool(orth < tol and np.linalg.det(R) > 0.0)


# ---------------------------------------------------------------------------
# quaternions, stored (qx, qy, qz, qw)
# ---------------------------------------------------------------------------

def quat_identity():
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return q / n


def quat_canonical(q):
    """Unit quaternion on the qw >= 0 hemisphere."""
    q = quat_normalize(q)
    return -q if q[3] < 0.0 else q


def quat_conjugate(q):
    return np.array([-q[0], -q[1], -q[2], q[3]])


def quat_mul(a, b):
    """Hamilton product a*b; composing rotations: R(a*b) = R(a) @ R(b)."""
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def quat_rotate(q, v):
    """Rotate vector v by unit quaternion q."""
    qv = np.array([q[0], q[1], q[2]])
    t = 2.0 * np.cross(qv, v)
    return np.asarray(v, dtype=float) + q[3] * t + np.cross(qv, t)


def quat_to_rotation(q):
    x, y, z, w = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_to_quat(R):
    """Rotation matrix to canonical unit quaternion (Shepperd's method)."""
    R = np.asarray(R)
    tr = np.trace(R)
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    return quat_canonical(np.array([x, y, z, w]))


def quat_angle(q):
    """Rotation angle of a unit quaternion, in [0, pi]."""
    q = quat_canonical(q)
    return 2.0 * np.arccos(np.clip(q[3], -1.0, 1.0))


def rotation_angle(R):
    """Geodesic angle of a rotation matrix, acos((trace-1)/2) clamped."""
    return float(np.arccos(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)))


def euler_to_quat(roll, pitch, yaw):
    return rotation_to_quat(euler_to_rotation(roll, pitch, yaw))


def quat_to_euler(q):
    """(roll, pitch, yaw) from a unit quaternion (Z-Y-X convention)."""
    return rotation_to_euler(quat_to_rotation(quat_normalize(q)))


def near_gimbal_lock(pitch, eps=GIMBAL_EPS):
    return bool(abs(abs(wrap_angle(pitch)) - np.pi / 2) < eps)


def euler_quat_roundtrip(roll, pitch, yaw):
    """euler -> quat -> euler, returning ((roll, pitch, yaw), gimbal_flag).

    The flag marks pitch within GIMBAL_EPS of +/-pi/2, where the extraction
    is ill-conditioned and the roundtrip identity is not guaranteed.
    """
    e = quat_to_euler(euler_to_quat(roll, pitch, yaw))
    return e, near_gimbal_lock(pitch)


# ---------------------------------------------------------------------------
# similarity transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sim3:
    """Similarity transform p -> scale * rotation @ p + translation."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not is_rotation(self.rotation, tol=1e-8):
            raise ValueError("rotation block is not a valid rotation matrix")

    @staticmethod
    def identity():
        return Sim3(1.0, np.eye(3), np.zeros(3))

    def apply(self, p):
        """Apply to one point (3,) or a stack of points (n, 3)."""
        p = np.asarray(p, dtype=float)
        return self.scale * p @ self.rotation.T + self.translation

    def compose(self, other):
        """self after other: (self.compose(other)).apply(p) == self.apply(other.apply(p))."""
        return Sim3(
            self.scale * other.scale,
            self.rotation @ other.rotation,
            self.scale * self.rotation @ other.translation + self.translation,
        )

    def inverse(self):
        Rinv = self.rotation.T
        return Sim3(1.0 / self.scale, Rinv, -Rinv @ self.translation / self.scale)
