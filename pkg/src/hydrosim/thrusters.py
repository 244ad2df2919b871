"""Thruster force model, actuator filtering, and geometry-to-wrench mapping.

Each thruster i sits at body-frame position r_i pushing along unit
direction n_i. A unitless command in [-1, 1] passes through a first-order
low-pass filter and maps linearly to thrust:

    force_i = C_T * rho * omega_max^2 * D_prop^4 * u_f_i   [N]

The allocation matrix stacks columns [n_i; r_i x n_i] so that
wrench = A @ forces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SaturationError(ValueError):
    """Raw command outside [-1, 1]; clamp before filtering."""

    def __init__(self, value):
        super().__init__(f"thruster command {value!r} outside [-1, 1]")
        self.value = value


@dataclass
class WaterParams:
    density: float = 1000.0  # kg/m^3

    def __post_init__(self):
        if not self.density > 0.0:
            raise ValueError(f"water density must be positive, got {self.density}")


@dataclass
class ThrusterSpec:
    """Geometry and coefficients of one thruster (body frame, SI units)."""

    position: np.ndarray
    direction: np.ndarray
    thrust_coeff: float  # dimensionless C_T
    max_speed: float  # rad/s
    prop_diameter: float  # m
    time_constant: float = 0.0  # s; 0 disables the filter

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.direction = np.asarray(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(self.direction)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"thruster direction must be unit length, |n| = {n}")
        if not self.max_speed > 0.0:
            raise ValueError("max_speed must be positive")
        if not self.prop_diameter > 0.0:
            raise ValueError("prop_diameter must be positive")
        if self.time_constant < 0.0:
            raise ValueError("time_constant must be non-negative")

    def gain(self, water: WaterParams) -> float:
        """Thrust at u_f = 1, i.e. C_T * rho * omega_max^2 * D^4 [N]."""
        return self.thrust_coeff * water.density * self.max_speed**2 * self.prop_diameter**4


def filter_alpha(dt: float, time_constant: float) -> float:
    """Exact first-order discretization; 1.0 (pass-through) when t_c = 0."""
    if time_constant <= 0.0:
        return 1.0
    return 1.0 - np.exp(-dt / time_constant)


def filter_input(u: float, u_f_prev: float, dt: float, time_constant: float) -> float:
    """One low-pass filter update toward command u in [-1, 1]."""
    if abs(u) > 1.0:
        raise SaturationError(u)
    return u_f_prev + filter_alpha(dt, time_constant) * (u - u_f_prev)


def thrust_force(u_f: float, spec: ThrusterSpec, water: WaterParams) -> float:
    """Signed thrust [N]; negative u_f reverses."""
    if abs(u_f) > 1.0 + 1e-12:
        raise SaturationError(u_f)
    return spec.gain(water) * u_f


def allocation_matrix(thrusters) -> np.ndarray:
    """6xN matrix with column i = [n_i; r_i x n_i] mapping per-thruster
    force to a body wrench."""
    if len(thrusters) < 1:
        raise ValueError("need at least one thruster")
    cols = []
    for spec in thrusters:
        cols.append(np.concatenate([spec.direction, np.cross(spec.position, spec.direction)]))
    return np.column_stack(cols)


def total_wrench(u_f, thrusters, water: WaterParams) -> np.ndarray:
    """Body wrench produced by filtered inputs u_f (length N)."""
    u_f = np.asarray(u_f, dtype=float)
    if u_f.shape != (len(thrusters),):
        raise ValueError(f"expected {len(thrusters)} inputs, got shape {u_f.shape}")
    forces = np.array([thrust_force(u, spec, water) for u, spec in zip(u_f, thrusters)])
    return allocation_matrix(thrusters) @ forces


class ActuatorState:
    """Filtered inputs of an N-thruster bank, mutated by the simulation loop."""

    def __init__(self, n: int):
        self.u_f = np.zeros(n)

    def reset(self):
        self.u_f[:] = 0.0

    def copy(self):
        out = ActuatorState(self.u_f.shape[0])
        out.u_f[:] = self.u_f
        return out
