import numpy as np
import pytest

from hydrosim.dynamics import DynamicsParams, HydroParams, RigidBodyParams, VehicleState
from hydrosim.mpc import (
    AllocationError,
    MpcConfig,
    Reference,
    allocate,
    control_step,
    fallback_wrench,
    linearize,
    pose_error,
    predicted_cost,
    solve_box_qp,
    solve_wrench,
)
from hydrosim.sim import Simulation
from hydrosim.thrusters import ThrusterSpec, WaterParams, total_wrench


def free_mass_params():
    """Unit-mass, drag-free, weightless 6-DOF block: a pure double integrator."""
    rb = RigidBodyParams(mass=1.0, inertia=np.eye(3))
    return DynamicsParams(rb, HydroParams())


def lqr_sequence(A, B, Qx, R, x0, horizon):
    """Finite-horizon discrete LQR via backward Riccati recursion: the exact
    minimizer of the same quadratic cost without input bounds.

    Cost: sum_{k=1..H} x_k' Qx x_k + sum_{k=0..H-1} u_k' R u_k, so the
    value function at the horizon end is zero and every stage folds one
    state cost into S = Qx + P.
    """
    P = np.zeros_like(Qx)
    gains = []
    for _ in range(horizon):
        S = Qx + P
        K = np.linalg.solve(R + B.T @ S @ B, B.T @ S @ A)
        gains.append(K)
        P = A.T @ S @ A - A.T @ S @ B @ K
    gains.reverse()  # gains[0] is the first-step feedback
    x = np.asarray(x0, dtype=float)
    us = []
    for K in gains:
        u = -K @ x
        us.append(u)
        x = A @ x + B @ u
    return np.asarray(us)


class TestBoxQp:
    def test_unconstrained_solution(self):
        rng = np.random.default_rng(31)
        A = rng.normal(size=(8, 8))
        H = A @ A.T + 8 * np.eye(8)
        g = rng.normal(size=8)
        x, info = solve_box_qp(H, g, -1e9 * np.ones(8), 1e9 * np.ones(8))
        assert info["converged"]
        assert np.allclose(x, np.linalg.solve(H, -g), atol=1e-8)

    def test_matches_cvxpy_on_random_box_qps(self):
        cvxpy = pytest.importorskip("cvxpy")
        rng = np.random.default_rng(32)
        for _ in range(20):
            n = int(rng.integers(4, 16))
            A = rng.normal(size=(n, n))
            H = A @ A.T + n * np.eye(n) * rng.uniform(0.1, 2.0)
            g = 5.0 * rng.normal(size=n)
            lo = -rng.uniform(0.05, 1.0, n)
            hi = rng.uniform(0.05, 1.0, n)
            x, info = solve_box_qp(H, g, lo, hi)
            assert info["converged"]
            z = cvxpy.Variable(n)
            prob = cvxpy.Problem(
                cvxpy.Minimize(0.5 * cvxpy.quad_form(z, H) + g @ z),
                [z >= lo, z <= hi],
            )
            prob.solve(solver="CLARABEL")
            obj_mine = 0.5 * x @ H @ x + g @ x
            assert obj_mine <= prob.value + 1e-6
            assert np.allclose(x, z.value, atol=1e-4)

    def test_kkt_residual_reported(self):
        H = np.eye(3)
        g = np.array([10.0, -10.0, 0.0])
        x, info = solve_box_qp(H, g, -np.ones(3), np.ones(3))
        assert info["converged"]
        assert info["kkt_residual"] <= 1e-8
        assert np.allclose(x, [-1.0, 1.0, 0.0])


class TestSolveWrench:
    def test_hover_at_target_needs_nothing(self):
        params = free_mass_params()
        cfg = MpcConfig()
        state = VehicleState()
        seq, info = solve_wrench(state, Reference(pose=np.zeros(6)), cfg, params)
        assert info["converged"]
        assert np.max(np.abs(seq[0])) < 1e-6

    def test_matches_unbounded_lqr_on_double_integrator(self):
        params = free_mass_params()
        cfg = MpcConfig(
            horizon=15,
            tau_min=-1e8 * np.ones(6),
            tau_max=1e8 * np.ones(6),
            velocity_weight=np.zeros((6, 6)),
        )
        state = VehicleState()
        ref = Reference(pose=np.array([1.0, 0, 0, 0, 0, 0]))
        seq, info = solve_wrench(state, ref, cfg, params)
        assert info["converged"]

        A, B, c = linearize(state, params, cfg.period)
        assert np.allclose(c, 0.0)
        Qx = np.zeros((12, 12))
        Qx[:6, :6] = cfg.pose_weight
        x0 = np.concatenate([pose_error(state.eta, ref.pose), state.nu])
        want = lqr_sequence(A, B, Qx, cfg.input_weight, x0, cfg.horizon)
        assert np.allclose(seq, want, atol=1e-6)
        assert seq[0][0] > 0.0  # push toward the reference

    def test_bounds_respected_with_far_reference(self):
        params = free_mass_params()
        cfg = MpcConfig(tau_min=-0.1 * np.ones(6), tau_max=0.1 * np.ones(6))
        state = VehicleState()
        ref = Reference(pose=np.array([50.0, -20.0, 10.0, 0, 0, 3.0]))
        seq, info = solve_wrench(state, ref, cfg, params)
        assert np.all(seq >= cfg.tau_min - 1e-12)
        assert np.all(seq <= cfg.tau_max + 1e-12)

    def test_cost_dominates_zero_and_fallback(self, bluerov):
        rng = np.random.default_rng(33)
        cfg = bluerov.mpc
        for _ in range(10):
            state = VehicleState(
                np.concatenate([rng.uniform(-2, 2, 3), rng.uniform(-0.5, 0.5, 3)]),
                rng.uniform(-0.5, 0.5, 6),
                0.0,
            )
            ref = Reference(pose=np.concatenate([rng.uniform(-2, 2, 3), [0, 0, rng.uniform(-2, 2)]]))
            seq, info = solve_wrench(state, ref, cfg, bluerov.dynamics)
            zero_cost = predicted_cost(state, ref, cfg, bluerov.dynamics, np.zeros((cfg.horizon, 6)))
            fb = np.tile(fallback_wrench(state, ref, cfg), (cfg.horizon, 1))
            fb_cost = predicted_cost(state, ref, cfg, bluerov.dynamics, fb)
            assert info["cost"] <= zero_cost + 1e-9
            assert info["cost"] <= fb_cost + 1e-9


class TestAllocate:
    def test_zero_wrench(self, bluerov):
        res = allocate(np.zeros(6), bluerov.thrusters, bluerov.water)
        assert np.allclose(res.commands, 0.0)
        assert not res.saturated

    def test_roundtrip_identity(self, bluerov):
        rng = np.random.default_rng(34)
        for _ in range(100):
            tau = rng.uniform(-1, 1, 6) * np.array([30, 30, 50, 3, 3, 6])
            res = allocate(tau, bluerov.thrusters, bluerov.water)
            achieved = total_wrench(res.raw, bluerov.thrusters, bluerov.water)
            assert np.max(np.abs(achieved - tau)) < 1e-9

    def test_pure_heave_uses_vertical_group_only(self, bluerov):
        res = allocate([0, 0, -40.0, 0, 0, 0], bluerov.thrusters, bluerov.water)
        horizontals, verticals = res.raw[:4], res.raw[4:]
        assert np.allclose(horizontals, 0.0, atol=1e-12)
        assert np.allclose(verticals, verticals[0])
        assert verticals[0] > 0.0

    def test_minimum_norm_among_feasible(self, bluerov):
        # the 8-thruster bank has a 2-dim force nullspace (equal gains), so
        # brute-force nullspace perturbations must never beat the pinv norm
        from hydrosim.thrusters import allocation_matrix

        T = allocation_matrix(bluerov.thrusters)
        gains = np.array([t.gain(bluerov.water) for t in bluerov.thrusters])
        assert np.allclose(gains, gains[0])  # identical thrusters: f-norm == u-norm scaled
        null_basis = np.linalg.svd(T)[2][6:]  # (2, 8) rows spanning null(T)
        rng = np.random.default_rng(35)
        for _ in range(20):
            tau = rng.uniform(-1, 1, 6) * np.array([30, 30, 50, 3, 3, 6])
            res = allocate(tau, bluerov.thrusters, bluerov.water)
            f0 = res.raw * gains
            for _ in range(200):
                f_alt = f0 + null_basis.T @ rng.normal(scale=5.0, size=2)
                assert np.allclose(T @ f_alt, tau, atol=1e-8)
                assert np.linalg.norm(f_alt) >= np.linalg.norm(f0) - 1e-12

    def test_rank_deficient_names_lost_dofs(self):
        thrusters = [
            ThrusterSpec(position=(0, 0, 0), direction=(1, 0, 0),
                         thrust_coeff=1.0, max_speed=10.0, prop_diameter=0.1),
            ThrusterSpec(position=(0, 1, 0), direction=(1, 0, 0),
                         thrust_coeff=1.0, max_speed=10.0, prop_diameter=0.1),
        ]
        with pytest.raises(AllocationError) as err:
            allocate([0, 1.0, 0, 0, 0, 0], thrusters, WaterParams())
        assert "rank" in str(err.value)

    def test_saturation_flag(self, bluerov):
        res = allocate([500.0, 0, 0, 0, 0, 0], bluerov.thrusters, bluerov.water)
        assert res.saturated
        assert np.all(np.abs(res.commands) <= 1.0)


class TestControlStep:
    def test_at_target_zero_commands(self, bluerov):
        state = VehicleState()
        u, tau, info = control_step(state, Reference(pose=np.zeros(6)), bluerov.mpc,
                                    bluerov.dynamics, bluerov.thrusters, bluerov.water)
        assert np.max(np.abs(u)) < 1e-6

    def test_forward_target_net_positive_surge(self, bluerov):
        state = VehicleState()
        u, tau, info = control_step(state, Reference(pose=np.array([1.0, 0, 0, 0, 0, 0])),
                                    bluerov.mpc, bluerov.dynamics, bluerov.thrusters, bluerov.water)
        surge = sum(ui * spec.direction[0] for ui, spec in zip(u, bluerov.thrusters))
        assert surge > 0.0
        assert tau[0] > 0.0

    def test_closed_loop_surge_step(self, bluerov):
        sim = Simulation(dynamics=bluerov.dynamics, thrusters=bluerov.thrusters,
                         water=bluerov.water, dt=bluerov.physics_dt)
        ref = Reference(pose=np.array([1.0, 0, 0, 0, 0, 0]))
        steps = int(round(bluerov.mpc.period / bluerov.physics_dt))
        for _ in range(int(15.0 / bluerov.mpc.period)):
            u, tau, _ = control_step(sim.state, ref, bluerov.mpc, bluerov.dynamics,
                                     bluerov.thrusters, bluerov.water)
            sim.advance_thrusters(u, steps)
        err = pose_error(sim.state.eta, ref.pose)
        assert np.max(np.abs(err)) < 0.05


class TestFallback:
    def test_iteration_cap_triggers_saturated_proportional(self, bluerov, caplog):
        import dataclasses
        import logging

        cfg = dataclasses.replace(bluerov.mpc, max_iter=0, kkt_tol=1e-16)
        state = VehicleState(np.array([5.0, 0, 0, 0, 0, 0]), np.zeros(6), 0.0)
        ref = Reference(pose=np.zeros(6))
        with caplog.at_level(logging.WARNING, logger="hydrosim.mpc"):
            seq, info = solve_wrench(state, ref, cfg, bluerov.dynamics)
        assert info["fallback"]
        assert any("falling back" in r.message for r in caplog.records)
        want = fallback_wrench(state, ref, cfg)
        assert np.allclose(seq, np.tile(want, (cfg.horizon, 1)))
        assert np.all(seq >= cfg.tau_min - 1e-12)
        assert np.all(seq <= cfg.tau_max + 1e-12)

    def test_fallback_wrench_saturates_on_big_errors(self, bluerov):
        state = VehicleState(np.array([100.0, 0, 0, 0, 0, 0]), np.zeros(6), 0.0)
        tau = fallback_wrench(state, Reference(pose=np.zeros(6)), bluerov.mpc)
        assert tau[0] == bluerov.mpc.tau_min[0]  # pushes back toward the target, clipped
