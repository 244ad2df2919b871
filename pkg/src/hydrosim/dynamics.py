"""6-DOF underwater vehicle dynamics in the body frame.

The equation of motion (SNAME notation, NED world frame):

    (M_rb + M_a) nu_dot = tau - C_rb(nu) nu - C_a(nu) nu - D(nu) nu - g(eta)

with rigid-body and added-mass Coriolis matrices built from the respective
mass matrices, linear-plus-quadratic drag D(nu) = Dl + Dq * diag(|nu|), and
hydrostatic restoring g(eta) from weight/buoyancy at the CG/CB offsets.

Integration is fixed-step velocity Verlet (default 1e-3 s). Velocity
dependence of the forces is handled by a single fixed-point pass when the
end-of-step acceleration is recomputed, which keeps the scheme second order
(verified by the convergence tests).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geom import canonicalize_euler, skew

DEFAULT_DT = 1e-3

STATE_LABELS = ("x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r")


class ConfigurationError(ValueError):
    """Invalid physical parameters (non-SPD inertia, singular mass matrix...)."""


class DivergenceError(RuntimeError):
    """Integration produced a non-finite state component."""

    def __init__(self, component: str, time: float):
        super().__init__(f"state component '{component}' became non-finite at t={time:.6f} s")
        self.component = component
        self.time = time


def _as_mat6(m, name):
    m = np.asarray(m, dtype=float)
    if m.shape == (6,):
        m = np.diag(m)
    if m.shape != (6, 6):
        raise ConfigurationError(f"{name} must be 6x6 or a length-6 diagonal, got {m.shape}")
    return m


@dataclass
class RigidBodyParams:
    """Mass properties. inertia is the 3x3 tensor about the CG [kg m^2];
    r_g/r_b are CG/CB offsets from the body origin [m]; weight/buoyancy in N."""

    mass: float
    inertia: np.ndarray
    r_g: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    weight: float = 0.0
    buoyancy: float = 0.0

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        if self.inertia.shape == (3,):
            self.inertia = np.diag(self.inertia)
        self.r_g = np.asarray(self.r_g, dtype=float)
        self.r_b = np.asarray(self.r_b, dtype=float)
        if not self.mass > 0.0:
            raise ConfigurationError(f"mass must be positive, got {self.mass}")
        if self.inertia.shape != (3, 3) or not np.allclose(self.inertia, self.inertia.T, atol=1e-12):
            raise ConfigurationError("inertia must be a symmetric 3x3 tensor")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0.0):
            raise ConfigurationError("inertia must be positive definite")
        if self.weight < 0.0 or self.buoyancy < 0.0:
            raise ConfigurationError("weight and buoyancy must be non-negative")


@dataclass
class HydroParams:
    """Added mass and damping. Matrices accept full 6x6 or length-6 diagonals."""

    added_mass: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))
    linear_damping: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))
    quad_damping: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))

    def __post_init__(self):
        self.added_mass = _as_mat6(self.added_mass, "added_mass")
        self.linear_damping = _as_mat6(self.linear_damping, "linear_damping")
        self.quad_damping = _as_mat6(self.quad_damping, "quad_damping")
        if not np.allclose(self.added_mass, self.added_mass.T, atol=1e-9):
            raise ConfigurationError("added_mass must be symmetric")
        if np.any(np.linalg.eigvalsh(self.added_mass) < -1e-9):
            raise ConfigurationError("added_mass must be positive semidefinite")
        for name, m in (("linear_damping", self.linear_damping), ("quad_damping", self.quad_damping)):
            if np.any(np.diag(m) < 0.0):
                raise ConfigurationError(f"{name} diagonal entries must be non-negative")


@dataclass
class SineComponent:
    """One per-axis sinusoid A * sin(w t + p). Constant offsets are encoded
    as w = 0, p = pi/2."""

    amplitude: np.ndarray
    frequency: np.ndarray = field(default_factory=lambda: np.zeros(6))
    phase: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=float).reshape(6)
        self.frequency = np.asarray(self.frequency, dtype=float).reshape(6)
        self.phase = np.asarray(self.phase, dtype=float).reshape(6)
        if np.any(self.frequency < 0.0):
            raise ConfigurationError("disturbance frequencies must be non-negative")


@dataclass
class DisturbanceModel:
    """Time-varying external wrench: 'constant', 'sinusoidal' or 'sum_of_sines'."""

    kind: str = "constant"
    components: list = field(default_factory=list)

    KINDS = ("constant", "sinusoidal", "sum_of_sines")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown disturbance kind '{self.kind}'")
        if self.kind == "constant":
            for c in self.components:
                c.frequency = np.zeros(6)
                c.phase = np.full(6, np.pi / 2)
        if self.kind == "sinusoidal" and len(self.components) > 1:
            raise ConfigurationError("sinusoidal disturbance takes a single component")

    @staticmethod
    def none():
        return DisturbanceModel(kind="constant", components=[])

    def arrays(self):
        """(amplitudes, frequencies, phases) stacked (K, 6) for the kernel."""
        if not self.components:
            z = np.zeros((0, 6))
            return z, z.copy(), z.copy()
        amp = np.stack([c.amplitude for c in self.components])
        freq = np.stack([c.frequency for c in self.components])
        phase = np.stack([c.phase for c in self.components])
        return amp, freq, phase


def disturbance_wrench(model: DisturbanceModel, t: float) -> np.ndarray:
    """Evaluate the disturbance wrench at time t >= 0."""
    amp, freq, phase = model.arrays()
    out = np.zeros(6)
    for c in range(amp.shape[0]):
        out += amp[c] * np.sin(freq[c] * t + phase[c])
    return out


@dataclass
class VehicleState:
    """Pose eta = (x, y, z, roll, pitch, yaw) in NED [m, rad], body twist
    nu = (u, v, w, p, q, r) [m/s, rad/s], simulation time t [s]."""

    eta: np.ndarray = field(default_factory=lambda: np.zeros(6))
    nu: np.ndarray = field(default_factory=lambda: np.zeros(6))
    t: float = 0.0

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float).reshape(6).copy()
        self.nu = np.asarray(self.nu, dtype=float).reshape(6).copy()
        self.eta[3], self.eta[4], self.eta[5] = canonicalize_euler(*self.eta[3:])

    def copy(self):
        return VehicleState(self.eta.copy(), self.nu.copy(), self.t)

    @property
    def position(self):
        return self.eta[:3]

    @property
    def attitude(self):
        return self.eta[3:]


def rigid_body_mass_matrix(rb: RigidBodyParams) -> np.ndarray:
    """Rigid-body mass matrix about the body origin, with m*S(r_g) coupling
    blocks and the inertia tensor moved from the CG by the parallel-axis rule."""
    S = skew(rb.r_g)
    M = np.zeros((6, 6))
    M[:3, :3] = rb.mass * np.eye(3)
    M[:3, 3:] = -rb.mass * S
    M[3:, :3] = rb.mass * S
    M[3:, 3:] = rb.inertia - rb.mass * (S @ S)
    if np.any(np.linalg.eigvalsh(M) <= 0.0):
        raise ConfigurationError("rigid-body mass matrix is not positive definite")
    return M


def coriolis_matrix(M: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Skew-symmetric Coriolis matrix from a symmetric 6x6 mass matrix."""
    M = np.asarray(M, dtype=float)
    nu = np.asarray(nu, dtype=float)
    a = M[:3, :3] @ nu[:3] + M[:3, 3:] @ nu[3:]
    b = M[3:, :3] @ nu[:3] + M[3:, 3:] @ nu[3:]
    C = np.zeros((6, 6))
    C[:3, 3:] = -skew(a)
    C[3:, :3] = -skew(a)
    C[3:, 3:] = -skew(b)
    return C


def damping_wrench(h: HydroParams, nu: np.ndarray) -> np.ndarray:
    """D(nu) @ nu with D(nu) = Dl + Dq * diag(|nu|)."""
    nu = np.asarray(nu, dtype=float)
    return kernels.damping_force(h.linear_damping, h.quad_damping, nu)


def restoring_wrench(rb: RigidBodyParams, attitude) -> np.ndarray:
    """Hydrostatic wrench g(eta) for the given (roll, pitch, yaw)."""
    roll, pitch = float(attitude[0]), float(attitude[1])
    return kernels.restoring_force(rb.weight, rb.buoyancy, rb.r_g, rb.r_b, roll, pitch)


class DynamicsParams:
    """Precomputed matrices for the equation of motion (shared, immutable)."""

    def __init__(self, rigid_body: RigidBodyParams, hydro: HydroParams):
        self.rigid_body = rigid_body
        self.hydro = hydro
        self.mass_matrix_rb = rigid_body_mass_matrix(rigid_body)
        self.mass_matrix = self.mass_matrix_rb + hydro.added_mass
        try:
            self.mass_matrix_inv = np.linalg.inv(self.mass_matrix)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError("total mass matrix M_rb + M_a is singular") from exc
        cond = np.linalg.cond(self.mass_matrix)
        if not np.isfinite(cond) or cond > 1e12:
            raise ConfigurationError("total mass matrix M_rb + M_a is singular or ill-conditioned")

    def kernel_args(self):
        rb, h = self.rigid_body, self.hydro
        return (
            self.mass_matrix_inv,
            self.mass_matrix_rb,
            h.added_mass,
            h.linear_damping,
            h.quad_damping,
            rb.weight,
            rb.buoyancy,
            rb.r_g,
            rb.r_b,
        )


_NO_THRUSTERS = (
    np.zeros((6, 0)),  # allocation
    np.zeros(0),  # gain
    np.zeros(0),  # alpha
    np.zeros(0),  # u_cmd
)
_NO_DIST = (np.zeros((0, 6)), np.zeros((0, 6)), np.zeros((0, 6)))
_NO_RECORD = (np.zeros((0, 6)), np.zeros((0, 6)))


def acceleration(state: VehicleState, params: DynamicsParams, tau) -> np.ndarray:
    """nu_dot from the equation of motion at the given state and wrench."""
    tau = np.asarray(tau, dtype=float).reshape(6)
    return kernels.acceleration_core(state.eta, state.nu, tau, *params.kernel_args())


def step(state: VehicleState, params: DynamicsParams, tau, dt: float = DEFAULT_DT) -> VehicleState:
    """One velocity Verlet step under a constant external wrench tau."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    tau = np.asarray(tau, dtype=float).reshape(6)
    eta, nu, t, status, bad = kernels.verlet_advance(
        state.eta,
        state.nu,
        state.t,
        dt,
        1,
        tau,
        *_NO_DIST,
        *_NO_THRUSTERS,
        np.zeros(0),
        *params.kernel_args(),
        False,
        *_NO_RECORD,
    )
    if status != kernels.STATUS_OK:
        raise DivergenceError(STATE_LABELS[bad], t)
    return VehicleState(eta, nu, t)
