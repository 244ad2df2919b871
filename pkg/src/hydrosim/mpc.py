"""Receding-horizon wrench controller and pseudo-inverse control allocation.

Two-step control: a box-constrained QP over a linearized, discretized
prediction of the vehicle dynamics yields an optimal body-wrench sequence;
the first wrench is mapped to per-thruster commands through the
Moore-Penrose pseudo-inverse of the allocation matrix.

The QP is condensed (decision variable = stacked wrench sequence) and solved
with a projected-Newton active-set iteration: deterministic, dependency-free,
terminating on a KKT residual tolerance with an iteration cap.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsParams, VehicleState, acceleration, coriolis_matrix, restoring_wrench
from .geom import euler_to_rotation, wrap_angle
from .thrusters import WaterParams, allocation_matrix

log = logging.getLogger("hydrosim.mpc")

DOF_LABELS = ("surge", "sway", "heave", "roll", "pitch", "yaw")


class AllocationError(RuntimeError):
    """Allocation matrix cannot span the full wrench space."""


@dataclass
class Reference:
    """Desired pose (and implicitly zero desired twist)."""

    pose: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=float).reshape(6)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(6)


@dataclass
class MpcConfig:
    horizon: int = 20
    period: float = 0.05  # s, control update interval
    pose_weight: np.ndarray = field(default_factory=lambda: np.diag([10.0, 10.0, 10.0, 5.0, 5.0, 5.0]))
    velocity_weight: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, 1.0, 0.5, 0.5, 0.5]))
    input_weight: np.ndarray = field(default_factory=lambda: 0.01 * np.eye(6))
    tau_min: np.ndarray = field(default_factory=lambda: np.array([-40.0, -40.0, -60.0, -4.0, -4.0, -8.0]))
    tau_max: np.ndarray = field(default_factory=lambda: np.array([40.0, 40.0, 60.0, 4.0, 4.0, 8.0]))
    kkt_tol: float = 1e-8
    max_iter: int = 200
    fallback_gain: np.ndarray = field(default_factory=lambda: np.array([20.0, 20.0, 20.0, 4.0, 4.0, 4.0]))

    def __post_init__(self):
        self.pose_weight = np.asarray(self.pose_weight, dtype=float)
        self.velocity_weight = np.asarray(self.velocity_weight, dtype=float)
        self.input_weight = np.asarray(self.input_weight, dtype=float)
        self.tau_min = np.asarray(self.tau_min, dtype=float).reshape(6)
        self.tau_max = np.asarray(self.tau_max, dtype=float).reshape(6)
        self.fallback_gain = np.asarray(self.fallback_gain, dtype=float).reshape(6)
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.period > 0.0:
            raise ValueError("control period must be positive")
        for name, m in (("pose_weight", self.pose_weight), ("velocity_weight", self.velocity_weight)):
            if m.shape != (6, 6) or np.any(np.linalg.eigvalsh(0.5 * (m + m.T)) < -1e-12):
                raise ValueError(f"{name} must be a 6x6 PSD matrix")
        if self.input_weight.shape != (6, 6) or np.any(np.linalg.eigvalsh(self.input_weight) <= 0.0):
            raise ValueError("input_weight must be a 6x6 positive definite matrix")
        if np.any(self.tau_min >= self.tau_max):
            raise ValueError("tau_min must be elementwise below tau_max")


def pose_error(pose, ref_pose):
    """Pose error with per-axis shortest-angle wrapping on the attitude part."""
    e = np.asarray(pose, dtype=float) - np.asarray(ref_pose, dtype=float)
    e[3:] = [wrap_angle(a) for a in e[3:]]
    return e


def kinematic_matrix(eta):
    """6x6 body-to-world pose-rate map J(eta)."""
    phi, theta = eta[3], eta[4]
    sr, cr = np.sin(phi), np.cos(phi)
    cp = np.cos(theta)
    tp = np.tan(theta)
    J = np.zeros((6, 6))
    J[:3, :3] = euler_to_rotation(phi, theta, eta[5])
    J[3:, 3:] = np.array([[1.0, sr * tp, cr * tp], [0.0, cr, -sr], [0.0, sr / cp, cr / cp]])
    return J


def linearize(state: VehicleState, params: DynamicsParams, dt: float):
    """Affine discrete model x+ = A x + B tau + c for x = [pose_err; nu],
    linearized about the current state (reference pose held constant)."""
    nu0 = state.nu
    M_inv = params.mass_matrix_inv
    C0 = coriolis_matrix(params.mass_matrix_rb, nu0) + coriolis_matrix(params.hydro.added_mass, nu0)
    D_lin = params.hydro.linear_damping + 2.0 * params.hydro.quad_damping * np.abs(nu0)[None, :]
    F_nu = -M_inv @ (C0 + D_lin)
    J0 = kinematic_matrix(state.eta)
    f0 = acceleration(state, params, np.zeros(6))

    A = np.eye(12)
    A[:6, 6:] = dt * J0
    A[6:, 6:] = np.eye(6) + dt * F_nu
    B = np.zeros((12, 6))
    B[6:, :] = dt * M_inv
    c = np.zeros(12)
    c[6:] = dt * (f0 - F_nu @ nu0)
    return A, B, c


def _condense(A, B, c, x0, cfg: MpcConfig):
    """Stack the horizon into cost(U) = 0.5 U'H U + g'U + const over the
    concatenated wrench sequence U, plus replicated box bounds."""
    H = cfg.horizon
    Qx = np.zeros((12, 12))
    Qx[:6, :6] = cfg.pose_weight
    Qx[6:, 6:] = cfg.velocity_weight

    Ak = np.eye(12)
    powers = [np.eye(12)]
    for _ in range(H):
        Ak = A @ Ak
        powers.append(Ak)

    Bbar = np.zeros((12 * H, 6 * H))
    xfree = np.zeros(12 * H)  # Abar x0 + cbar
    acc = np.zeros(12)
    for k in range(1, H + 1):
        acc = A @ acc + c
        xfree[12 * (k - 1): 12 * k] = powers[k] @ x0 + acc
        for j in range(k):
            Bbar[12 * (k - 1): 12 * k, 6 * j: 6 * (j + 1)] = powers[k - 1 - j] @ B

    Qbig = np.kron(np.eye(H), Qx)
    Rbig = np.kron(np.eye(H), cfg.input_weight)
    Hqp = 2.0 * (Bbar.T @ Qbig @ Bbar + Rbig)
    Hqp = 0.5 * (Hqp + Hqp.T)
    gqp = 2.0 * Bbar.T @ (Qbig @ xfree)
    const = float(xfree @ Qbig @ xfree)
    lo = np.tile(cfg.tau_min, H)
    hi = np.tile(cfg.tau_max, H)
    return Hqp, gqp, const, lo, hi


def solve_box_qp(H, g, lo, hi, tol=1e-8, max_iter=200):
    """Minimize 0.5 x'Hx + g'x subject to lo <= x <= hi (H SPD).

    Projected Newton: free variables take a Newton step, bound-identified
    ones follow the projected gradient, with Armijo backtracking along the
    projection arc. Terminates when the projected-gradient KKT residual
    drops below tol.
    """
    x = np.clip(np.linalg.solve(H, -g), lo, hi)
    cost = lambda z: 0.5 * z @ (H @ z) + g @ z
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad = H @ x + g
        resid = x - np.clip(x - grad, lo, hi)
        if np.max(np.abs(resid)) <= tol:
            converged = True
            break
        eps = min(1e-2, float(np.max(np.abs(resid))))
        active = ((x <= lo + eps) & (grad > 0.0)) | ((x >= hi - eps) & (grad < 0.0))
        d = -grad.copy()
        free = np.where(~active)[0]
        if free.size:
            d[free] = -np.linalg.solve(H[np.ix_(free, free)], grad[free])
        c0 = cost(x)
        alpha = 1.0
        x_new = x
        for _ in range(48):
            cand = np.clip(x + alpha * d, lo, hi)
            if cost(cand) <= c0 + 1e-4 * (grad @ (cand - x)):
                x_new = cand
                break
            alpha *= 0.5
        if np.array_equal(x_new, x):
            # no progress possible at this precision
            break
        x = x_new
    resid = x - np.clip(x - (H @ x + g), lo, hi)
    return x, {"converged": converged, "iterations": iterations, "kkt_residual": float(np.max(np.abs(resid)))}


def solve_wrench(state: VehicleState, ref: Reference, cfg: MpcConfig, params: DynamicsParams):
    """Optimal wrench sequence (horizon, 6) toward the reference pose.

    Falls back to a saturated proportional wrench (held over the horizon)
    if the QP iteration cap is hit before reaching the KKT tolerance.
    """
    x0 = np.concatenate([pose_error(state.eta, ref.pose), state.nu - ref.velocity])
    A, B, c = linearize(state, params, cfg.period)
    Hqp, gqp, const, lo, hi = _condense(A, B, c, x0, cfg)
    U, info = solve_box_qp(Hqp, gqp, lo, hi, tol=cfg.kkt_tol, max_iter=cfg.max_iter)
    if not info["converged"]:
        log.warning(
            "QP did not reach KKT tol %.1e in %d iterations (residual %.2e); "
            "falling back to saturated proportional wrench",
            cfg.kkt_tol,
            cfg.max_iter,
            info["kkt_residual"],
        )
        tau = fallback_wrench(state, ref, cfg)
        seq = np.tile(tau, (cfg.horizon, 1))
        info = dict(info, fallback=True, cost=float(seq.ravel() @ (Hqp @ seq.ravel()) * 0.5 + gqp @ seq.ravel() + const))
        return seq, info
    seq = U.reshape(cfg.horizon, 6)
    info = dict(info, fallback=False, cost=float(0.5 * U @ (Hqp @ U) + gqp @ U + const))
    return seq, info


def fallback_wrench(state: VehicleState, ref: Reference, cfg: MpcConfig):
    """Saturated proportional wrench on the wrapped pose error."""
    e = pose_error(state.eta, ref.pose)
    return np.clip(-cfg.fallback_gain * e, cfg.tau_min, cfg.tau_max)


def predicted_cost(state: VehicleState, ref: Reference, cfg: MpcConfig, params: DynamicsParams, tau_seq):
    """Objective value of an arbitrary wrench sequence under the same
    prediction model the solver uses (for cost-dominance checks)."""
    x0 = np.concatenate([pose_error(state.eta, ref.pose), state.nu - ref.velocity])
    A, B, c = linearize(state, params, cfg.period)
    Hqp, gqp, const, _, _ = _condense(A, B, c, x0, cfg)
    U = np.asarray(tau_seq, dtype=float).reshape(cfg.horizon * 6)
    return float(0.5 * U @ (Hqp @ U) + gqp @ U + const)


@dataclass
class AllocationResult:
    commands: np.ndarray  # clamped to [-1, 1]
    raw: np.ndarray  # pre-clamp minimum-norm solution
    saturated: bool


def allocate(tau, thrusters, water: WaterParams) -> AllocationResult:
    """Minimum-norm per-thruster commands realizing the body wrench tau."""
    tau = np.asarray(tau, dtype=float).reshape(6)
    T = allocation_matrix(thrusters)
    u_svd, s, vt = np.linalg.svd(T)
    tol = s[0] * max(T.shape) * np.finfo(float).eps if s.size else 0.0
    rank = int(np.sum(s > tol))
    if rank < 6:
        lost = []
        for k in range(rank, 6):
            lost.append(DOF_LABELS[int(np.argmax(np.abs(u_svd[:, k])))])
        raise AllocationError(
            f"allocation matrix rank {rank} < 6; unreachable DOF: {', '.join(sorted(set(lost)))}"
        )
    forces = vt.T[:, :rank] @ ((u_svd.T[:rank] @ tau) / s[:rank])
    gains = np.array([spec.gain(water) for spec in thrusters])
    raw = forces / gains
    commands = np.clip(raw, -1.0, 1.0)
    return AllocationResult(commands=commands, raw=raw, saturated=bool(np.any(np.abs(raw) > 1.0)))


def control_step(state: VehicleState, ref: Reference, cfg: MpcConfig, params: DynamicsParams,
                 thrusters, water: WaterParams):
    """MPC solve followed by allocation of the first wrench; returns
    (commands, wrench, info)."""
    seq, info = solve_wrench(state, ref, cfg, params)
    result = allocate(seq[0], thrusters, water)
    return result.commands, seq[0], dict(info, saturated=result.saturated)
