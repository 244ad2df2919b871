"""Simulation session: one vehicle advanced at a fixed physics rate.

Owns the mutable VehicleState and ActuatorState; everything else (vehicle
parameters, thruster table, disturbance) is immutable and shared. Commands
arrive either as a raw body wrench or as per-thruster inputs that run
through the actuator filter at the physics rate.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .dynamics import (
    DEFAULT_DT,
    STATE_LABELS,
    DisturbanceModel,
    DivergenceError,
    DynamicsParams,
    VehicleState,
)
from .thrusters import ActuatorState, WaterParams, allocation_matrix, filter_alpha


class Simulation:
    def __init__(self, dynamics: DynamicsParams, thrusters=(), water: WaterParams | None = None,
                 dt: float = DEFAULT_DT, disturbance: DisturbanceModel | None = None,
                 initial_state: VehicleState | None = None):
        if not dt > 0.0:
            raise ValueError("physics dt must be positive")
        self.dynamics = dynamics
        self.thrusters = list(thrusters)
        self.water = water or WaterParams()
        self.dt = dt
        self.disturbance = disturbance or DisturbanceModel.none()
        self._dist_arrays = self.disturbance.arrays()
        n = len(self.thrusters)
        if n:
            self._alloc = allocation_matrix(self.thrusters)
            self._gains = np.array([s.gain(self.water) for s in self.thrusters])
            self._alphas = np.array([filter_alpha(dt, s.time_constant) for s in self.thrusters])
        else:
            self._alloc = np.zeros((6, 0))
            self._gains = np.zeros(0)
            self._alphas = np.zeros(0)
        self.actuators = ActuatorState(n)
        self.state = initial_state.copy() if initial_state else VehicleState()
        self._initial = self.state.copy()

    @property
    def n_thrusters(self):
        return len(self.thrusters)

    def reset(self, state: VehicleState | None = None):
        self.state = state.copy() if state else self._initial.copy()
        self.actuators.reset()
        return self.state

    def _advance(self, tau_const, u_cmd, n_steps, record):
        out_eta = np.zeros((n_steps, 6)) if record else np.zeros((0, 6))
        out_nu = np.zeros((n_steps, 6)) if record else np.zeros((0, 6))
        eta, nu, t, status, bad = kernels.verlet_advance(
            self.state.eta,
            self.state.nu,
            self.state.t,
            self.dt,
            n_steps,
            tau_const,
            *self._dist_arrays,
            self._alloc,
            self._gains,
            self._alphas,
            u_cmd,
            self.actuators.u_f,
            *self.dynamics.kernel_args(),
            record,
            out_eta,
            out_nu,
        )
        if status != kernels.STATUS_OK:
            raise DivergenceError(STATE_LABELS[bad], t)
        self.state = VehicleState(eta, nu, t)
        if record:
            return out_eta, out_nu
        return None

    def advance_wrench(self, tau, n_steps=1, record=False):
        """Advance under a constant external wrench, thrusters idle at their
        current filtered values (commands held at zero)."""
        tau = np.asarray(tau, dtype=float).reshape(6)
        return self._advance(tau, np.zeros(self.n_thrusters), n_steps, record)

    def advance_thrusters(self, u_cmd, n_steps=1, record=False):
        """Advance with zero-order-hold thruster commands in [-1, 1]."""
        u_cmd = np.clip(np.asarray(u_cmd, dtype=float).reshape(self.n_thrusters), -1.0, 1.0)
        return self._advance(np.zeros(6), u_cmd, n_steps, record)

    def current_thrust_wrench(self):
        """Body wrench from the present filtered thruster state."""
        return self._alloc @ (self._gains * self.actuators.u_f)

    def acceleration_now(self):
        """nu_dot at the current state (thrust + disturbance applied), for
        IMU sampling."""
        tau = self.current_thrust_wrench()
        from .dynamics import acceleration, disturbance_wrench

        tau = tau + disturbance_wrench(self.disturbance, self.state.t)
        return acceleration(self.state, self.dynamics, tau)
