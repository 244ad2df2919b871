import numpy as np
import pytest

from hydrosim.thrusters import (
    SaturationError,
    ThrusterSpec,
    WaterParams,
    allocation_matrix,
    filter_input,
    thrust_force,
    total_wrench,
)


def spec(position=(0, 0, 0), direction=(1, 0, 0), **kw):
    defaults = dict(thrust_coeff=1.0, max_speed=10.0, prop_diameter=0.1, time_constant=0.0)
    defaults.update(kw)
    return ThrusterSpec(position=position, direction=direction, **defaults)


class TestFilter:
    def test_passthrough_when_tc_zero(self):
        assert filter_input(0.7, 0.0, 0.001, 0.0) == 0.7

    def test_step_response_at_one_time_constant(self):
        u_f = 0.0
        dt, tc = 0.001, 0.05
        for _ in range(int(tc / dt)):
            u_f = filter_input(1.0, u_f, dt, tc)
        assert abs(u_f - (1.0 - np.exp(-1.0))) < 1e-3

    def test_converges_to_command(self):
        u_f = 0.0
        for _ in range(2000):
            u_f = filter_input(0.4, u_f, 0.01, 0.05)
        assert abs(u_f - 0.4) < 1e-6

    def test_contraction(self):
        u_f, prev_gap = -0.8, None
        for _ in range(50):
            u_f = filter_input(0.5, u_f, 0.001, 0.1)
            gap = abs(u_f - 0.5)
            if prev_gap is not None:
                assert gap < prev_gap
            prev_gap = gap

    def test_rejects_out_of_range(self):
        with pytest.raises(SaturationError):
            filter_input(1.5, 0.0, 0.001, 0.1)


class TestThrustForce:
    def test_zero(self):
        assert thrust_force(0.0, spec(), WaterParams()) == 0.0

    def test_formula(self):
        # C_T rho w^2 D^4 = 1 * 1000 * 100 * 1e-4 = 10 N at full input
        assert thrust_force(1.0, spec(), WaterParams(density=1000.0)) == pytest.approx(10.0)

    def test_reverse_thrust(self):
        assert thrust_force(-0.5, spec(), WaterParams(density=1000.0)) == pytest.approx(-5.0)

    def test_odd_and_linear(self):
        w = WaterParams(density=1000.0)
        rng = np.random.default_rng(21)
        for _ in range(50):
            u = rng.uniform(-1, 1)
            a = rng.uniform(-1, 1)
            assert thrust_force(-u, spec(), w) == pytest.approx(-thrust_force(u, spec(), w))
            if abs(a * u) <= 1.0:
                assert thrust_force(a * u, spec(), w) == pytest.approx(a * thrust_force(u, spec(), w))


class TestAllocation:
    def test_single_thruster_at_origin(self):
        A = allocation_matrix([spec()])
        assert np.allclose(A[:, 0], [1, 0, 0, 0, 0, 0])

    def test_lever_arm_moment(self):
        A = allocation_matrix([spec(position=(0, 1, 0))])
        assert np.allclose(A[:, 0], [1, 0, 0, 0, 0, -1])

    def test_direction_block_unit_norm(self):
        rng = np.random.default_rng(22)
        thrusters = []
        for _ in range(6):
            d = rng.normal(size=3)
            thrusters.append(spec(position=rng.normal(size=3), direction=d / np.linalg.norm(d)))
        A = allocation_matrix(thrusters)
        assert np.allclose(np.linalg.norm(A[:3], axis=0), 1.0)

    def test_rejects_non_unit_direction(self):
        with pytest.raises(ValueError):
            spec(direction=(1, 1, 0))

    def test_bluerov_heavy_rank_six(self, bluerov):
        A = allocation_matrix(bluerov.thrusters)
        assert A.shape == (6, 8)
        assert np.linalg.matrix_rank(A) == 6


class TestTotalWrench:
    def test_zero_inputs(self, bluerov):
        w = total_wrench(np.zeros(8), bluerov.thrusters, bluerov.water)
        assert np.allclose(w, 0.0)

    def test_opposing_pair_pure_moment(self):
        pair = [spec(position=(0, 1, 0), direction=(1, 0, 0)),
                spec(position=(0, -1, 0), direction=(-1, 0, 0))]
        w = total_wrench([0.5, 0.5], pair, WaterParams(density=1000.0))
        assert np.allclose(w[:3], 0.0, atol=1e-12)
        assert w[5] == pytest.approx(-10.0)  # both lever arms turn the same way

    def test_bluerov_vertical_group_pure_heave(self, bluerov):
        u = np.zeros(8)
        u[4:] = 0.5  # the four vertical thrusters
        w = total_wrench(u, bluerov.thrusters, bluerov.water)
        assert w[2] < 0.0  # thrust up (-z): positive input lifts the vehicle
        assert np.allclose([w[0], w[1], w[3], w[4], w[5]], 0.0, atol=1e-9)

    def test_length_mismatch(self, bluerov):
        with pytest.raises(ValueError):
            total_wrench(np.zeros(7), bluerov.thrusters, bluerov.water)
