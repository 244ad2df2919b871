"""Hot numeric kernels for the 1 kHz physics loop.

Every function in this module is written in plain numpy and is optionally
compiled with numba. Selection happens once at import time via the
HYDROSIM_NUMBA environment variable:

  HYDROSIM_NUMBA=1      force numba (ImportError if unavailable)
  HYDROSIM_NUMBA=0      force the pure-numpy fallback
  unset / "auto"        use numba when importable (the default)

Both paths run the same source, so results agree to floating-point noise;
`benchmarks/bench_kernels.py` compares their throughput.
"""
from __future__ import annotations

import os

import numpy as np

TWO_PI = 2.0 * np.pi

STATUS_OK = 0
STATUS_DIVERGED = 1


def _numba_requested():
    flag = os.environ.get("HYDROSIM_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    if flag in ("1", "true", "on", "yes"):
        return True
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


USING_NUMBA = _numba_requested()

if USING_NUMBA:
    from numba import njit

    def _jit(fn):
        return njit(cache=True)(fn)
else:

    def _jit(fn):
        return fn


@_jit
def _wrap_pi(x):
    # no-op when already in (-pi, pi] so canonical states stay bit-identical
    if -np.pi < x <= np.pi:
        return x
    w = (x + np.pi) % TWO_PI - np.pi
    if w <= -np.pi:
        w += TWO_PI
    elif w > np.pi:
        w -= TWO_PI
    return w


@_jit
def _cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@_jit
def coriolis_force(M, nu):
    """C(nu) @ nu for the Coriolis matrix built from a symmetric 6x6 mass
    matrix via the standard two-block skew construction."""
    mn = M @ nu  # [A; B] with A = M11 v + M12 w, B = M21 v + M22 w
    a = mn[:3]
    b = mn[3:]
    v = nu[:3]
    w = nu[3:]
    out = np.empty(6)
    out[:3] = _cross3(w, a)
    out[3:] = _cross3(v, a) + _cross3(w, b)
    return out


@_jit
def damping_force(Dl, Dq, nu):
    """(Dl + Dq * diag(|nu|)) @ nu, linear plus quadratic drag."""
    return Dl @ nu + Dq @ (np.abs(nu) * nu)


@_jit
def restoring_force(weight, buoyancy, r_g, r_b, phi, theta):
    """Hydrostatic wrench g(eta); enters the equation of motion with a
    minus sign, so a heavy vehicle gets a positive (downward) net force."""
    sphi = np.sin(phi)
    cphi = np.cos(phi)
    sth = np.sin(theta)
    cth = np.cos(theta)
    # unit down vector expressed in the body frame (third row of R)
    down = np.empty(3)
    down[0] = -sth
    down[1] = cth * sphi
    down[2] = cth * cphi
    f_w = weight * down
    f_b = -buoyancy * down
    out = np.empty(6)
    out[:3] = -(f_w + f_b)
    out[3:] = -(_cross3(r_g, f_w) + _cross3(r_b, f_b))
    return out


@_jit
def acceleration_core(eta, nu, tau, M_inv, M_rb, M_a, Dl, Dq, weight, buoyancy, r_g, r_b):
    """Body-frame acceleration: solve the 6-DOF equation of motion for nu_dot."""
    rhs = (
        tau
        - coriolis_force(M_rb, nu)
        - coriolis_force(M_a, nu)
        - damping_force(Dl, Dq, nu)
        - restoring_force(weight, buoyancy, r_g, r_b, eta[3], eta[4])
    )
    return M_inv @ rhs


@_jit
def pose_rate(eta, nu):
    """eta_dot = J(eta) @ nu: body twist mapped to NED pose rates."""
    phi, theta, psi = eta[3], eta[4], eta[5]
    cr, sr = np.cos(phi), np.sin(phi)
    cp, sp = np.cos(theta), np.sin(theta)
    cy, sy = np.cos(psi), np.sin(psi)
    R = np.empty((3, 3))
    R[0, 0] = cy * cp
    R[0, 1] = cy * sp * sr - sy * cr
    R[0, 2] = cy * sp * cr + sy * sr
    R[1, 0] = sy * cp
    R[1, 1] = sy * sp * sr + cy * cr
    R[1, 2] = sy * sp * cr - cy * sr
    R[2, 0] = -sp
    R[2, 1] = cp * sr
    R[2, 2] = cp * cr
    tp = sp / cp
    T = np.empty((3, 3))
    T[0, 0] = 1.0
    T[0, 1] = sr * tp
    T[0, 2] = cr * tp
    T[1, 0] = 0.0
    T[1, 1] = cr
    T[1, 2] = -sr
    T[2, 0] = 0.0
    T[2, 1] = sr / cp
    T[2, 2] = cr / cp
    out = np.empty(6)
    out[:3] = R @ nu[:3]
    out[3:] = T @ nu[3:]
    return out


@_jit
def _canonicalize_attitude(eta):
    if (
        -np.pi < eta[3] <= np.pi
        and -np.pi / 2 <= eta[4] <= np.pi / 2
        and -np.pi < eta[5] <= np.pi
    ):
        return
    theta = _wrap_pi(eta[4])
    if np.abs(theta) > np.pi / 2:
        if theta > 0.0:
            theta = np.pi - theta
        else:
            theta = -np.pi - theta
        eta[3] = eta[3] + np.pi
        eta[5] = eta[5] + np.pi
    eta[3] = _wrap_pi(eta[3])
    eta[4] = theta
    eta[5] = _wrap_pi(eta[5])


@_jit
def verlet_advance(
    eta,
    nu,
    t0,
    dt,
    n_steps,
    tau_const,
    dist_amp,
    dist_freq,
    dist_phase,
    alloc,
    thr_gain,
    thr_alpha,
    u_cmd,
    u_f,
    M_inv,
    M_rb,
    M_a,
    Dl,
    Dq,
    weight,
    buoyancy,
    r_g,
    r_b,
    record,
    out_eta,
    out_nu,
):
    """Advance n_steps of velocity Verlet at fixed dt.

    Per step: the actuator low-pass filter runs at the physics rate on
    u_cmd (zero-order-hold command), the thrust wrench and the disturbance
    wrench are added to tau_const, then one Verlet step executes with a
    single fixed-point pass for the velocity-dependent forces (half-kick,
    drift with J at the pre-drift pose, predict end velocity, recompute
    acceleration, half-kick).

    u_f is updated in place. Returns (eta, nu, t, status, bad_index) where
    status != STATUS_OK flags a non-finite state component bad_index
    (0..5 pose, 6..11 twist).
    """
    eta = eta.copy()
    nu = nu.copy()
    n_thr = u_f.shape[0]
    n_dist = dist_amp.shape[0]
    t = t0
    status = STATUS_OK
    bad = -1
    for k in range(n_steps):
        tau0 = tau_const.copy()
        if n_thr > 0:
            for i in range(n_thr):
                u_f[i] += thr_alpha[i] * (u_cmd[i] - u_f[i])
            tau0 += alloc @ (thr_gain * u_f)
        tau_a = tau0.copy()
        tau_b = tau0.copy()
        for c in range(n_dist):
            tau_a += dist_amp[c] * np.sin(dist_freq[c] * t + dist_phase[c])
            tau_b += dist_amp[c] * np.sin(dist_freq[c] * (t + dt) + dist_phase[c])

        a1 = acceleration_core(eta, nu, tau_a, M_inv, M_rb, M_a, Dl, Dq, weight, buoyancy, r_g, r_b)
        nu_half = nu + 0.5 * dt * a1
        eta = eta + dt * pose_rate(eta, nu_half)
        _canonicalize_attitude(eta)
        nu_pred = nu_half + 0.5 * dt * acceleration_core(
            eta, nu_half, tau_b, M_inv, M_rb, M_a, Dl, Dq, weight, buoyancy, r_g, r_b
        )
        a2 = acceleration_core(eta, nu_pred, tau_b, M_inv, M_rb, M_a, Dl, Dq, weight, buoyancy, r_g, r_b)
        nu = nu_half + 0.5 * dt * a2
        t = t0 + (k + 1) * dt

        for j in range(6):
            if status == STATUS_OK and not np.isfinite(eta[j]):
                status = STATUS_DIVERGED
                bad = j
            if status == STATUS_OK and not np.isfinite(nu[j]):
                status = STATUS_DIVERGED
                bad = 6 + j
        if status != STATUS_OK:
            return eta, nu, t, status, bad
        if record:
            out_eta[k] = eta
            out_nu[k] = nu
    return eta, nu, t, status, bad
