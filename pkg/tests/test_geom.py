import numpy as np
import pytest

from hydrosim.geom import (
    Sim3,
    canonicalize_euler,
    euler_quat_roundtrip,
    euler_to_quat,
    euler_to_rotation,
    is_rotation,
    near_gimbal_lock,
    quat_canonical,
    quat_mul,
    quat_rotate,
    quat_to_euler,
    quat_to_rotation,
    rotation_to_euler,
    rotation_to_quat,
    wrap_angle,
)


def test_euler_identity():
    assert np.allclose(euler_to_rotation(0, 0, 0), np.eye(3))


def test_yaw_90_maps_x_to_y():
    R = euler_to_rotation(0, 0, np.pi / 2)
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-12)


def test_roll_90_maps_y_to_z():
    R = euler_to_rotation(np.pi / 2, 0, 0)
    assert np.allclose(R @ [0, 1, 0], [0, 0, 1], atol=1e-12)


def test_rotations_orthonormal_proper():
    rng = np.random.default_rng(1)
    for _ in range(200):
        roll, yaw = rng.uniform(-np.pi, np.pi, 2)
        pitch = rng.uniform(-np.pi / 2, np.pi / 2)
        R = euler_to_rotation(roll, pitch, yaw)
        assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-9
        assert np.linalg.det(R) > 0
        assert is_rotation(R)


def test_euler_rotation_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(300):
        roll, yaw = rng.uniform(-np.pi, np.pi, 2)
        pitch = rng.uniform(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3)
        out = rotation_to_euler(euler_to_rotation(roll, pitch, yaw))
        assert np.allclose(out, (roll, pitch, yaw), atol=1e-9)


def test_quat_roundtrip_trivial():
    e, flag = euler_quat_roundtrip(0.0, 0.0, 0.0)
    assert np.allclose(e, 0.0)
    assert not flag


def test_quat_roundtrip_generic():
    e, flag = euler_quat_roundtrip(0.1, -0.2, 0.3)
    assert np.allclose(e, (0.1, -0.2, 0.3), atol=1e-9)
    assert not flag


def test_quat_roundtrip_gimbal_flag():
    _, flag = euler_quat_roundtrip(0.0, np.pi / 2, 0.0)
    assert flag
    assert near_gimbal_lock(np.pi / 2)
    assert not near_gimbal_lock(np.pi / 2 - 1e-3)


def test_quat_rotation_consistency():
    rng = np.random.default_rng(3)
    for _ in range(100):
        q = quat_canonical(rng.normal(size=4))
        R = quat_to_rotation(q)
        v = rng.normal(size=3)
        assert np.allclose(R @ v, quat_rotate(q, v), atol=1e-12)
        assert np.allclose(rotation_to_quat(R), q, atol=1e-9) or np.allclose(rotation_to_quat(R), -q, atol=1e-9)


def test_quat_mul_matches_matrix_product():
    rng = np.random.default_rng(4)
    for _ in range(50):
        qa = quat_canonical(rng.normal(size=4))
        qb = quat_canonical(rng.normal(size=4))
        assert np.allclose(
            quat_to_rotation(quat_mul(qa, qb)),
            quat_to_rotation(qa) @ quat_to_rotation(qb),
            atol=1e-12,
        )


def test_quat_storage_order_xyzw():
    # identity quaternion must be (0, 0, 0, 1)
    q = euler_to_quat(0, 0, 0)
    assert np.allclose(q, [0, 0, 0, 1])
    # 90 deg yaw has qz = sin(45 deg), qw = cos(45 deg)
    q = euler_to_quat(0, 0, np.pi / 2)
    assert np.allclose(q, [0, 0, np.sin(np.pi / 4), np.cos(np.pi / 4)], atol=1e-12)


def test_wrap_angle_range_and_stability():
    assert wrap_angle(3 * np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)  # (-pi, pi] convention
    for x in (0.0, 0.5, -3.0, np.pi):
        assert wrap_angle(x) == x  # bit-stable inside the range


def test_canonicalize_euler_folds_pitch():
    roll, pitch, yaw = canonicalize_euler(0.0, 2.0, 0.0)  # pitch beyond pi/2
    assert -np.pi / 2 <= pitch <= np.pi / 2
    R1 = euler_to_rotation(0.0, 2.0, 0.0)
    R2 = euler_to_rotation(roll, pitch, yaw)
    assert np.allclose(R1, R2, atol=1e-12)


class TestSim3:
    def test_identity(self):
        s = Sim3.identity()
        p = np.array([1.0, 2.0, 3.0])
        assert np.allclose(s.apply(p), p)

    def test_pure_scale(self):
        s = Sim3(2.0, np.eye(3), np.zeros(3))
        assert np.allclose(s.apply([1, 0, 0]), [2, 0, 0])

    def test_rotation_translation(self):
        s = Sim3(1.0, euler_to_rotation(0, 0, np.pi / 2), np.array([1.0, 1.0, 0.0]))
        assert np.allclose(s.apply([1, 0, 0]), [1, 2, 0], atol=1e-12)

    def test_compose_matches_sequential_apply(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            s1 = Sim3(float(rng.uniform(0.5, 2)), euler_to_rotation(*rng.uniform(-1, 1, 3)), rng.normal(size=3))
            s2 = Sim3(float(rng.uniform(0.5, 2)), euler_to_rotation(*rng.uniform(-1, 1, 3)), rng.normal(size=3))
            p = rng.normal(size=3)
            assert np.allclose(s2.compose(s1).apply(p), s2.apply(s1.apply(p)), atol=1e-9)

    def test_inverse(self):
        rng = np.random.default_rng(6)
        s = Sim3(1.7, euler_to_rotation(0.2, 0.1, -0.4), rng.normal(size=3))
        p = rng.normal(size=3)
        assert np.allclose(s.inverse().apply(s.apply(p)), p, atol=1e-12)

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            Sim3(0.0, np.eye(3), np.zeros(3))

    def test_rejects_non_rotation(self):
        with pytest.raises(ValueError):
            Sim3(1.0, np.eye(3) * 2.0, np.zeros(3))
