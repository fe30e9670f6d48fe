"""Quaternion/rotation helper correctness, mostly against random round trips."""

import numpy as np

from charsim.rotation import (
    heading_yaw,
    mat_to_quat,
    quat_from_rotvec,
    quat_geodesic_angle,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_slerp,
    quat_to_mat,
    rotvec_from_quat,
    wrap_angle,
    yaw_quat,
)


def rand_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def test_quat_mat_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(200):
        q = rand_quat(rng)
        R = quat_to_mat(q)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(R) - 1.0) < 1e-12
        q2 = mat_to_quat(R)
        assert quat_geodesic_angle(q, q2) < 1e-7


def test_quat_rotate_matches_matrix():
    rng = np.random.default_rng(1)
    for _ in range(100):
        q = rand_quat(rng)
        v = rng.normal(size=3)
        assert np.allclose(quat_rotate(q, v), quat_to_mat(q) @ v, atol=1e-12)


def test_quat_mul_composes():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b = rand_quat(rng), rand_quat(rng)
        v = rng.normal(size=3)
        lhs = quat_rotate(quat_mul(a, b), v)
        rhs = quat_rotate(a, quat_rotate(b, v))
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_rotvec_round_trip_canonical():
    rng = np.random.default_rng(3)
    for _ in range(300):
        v = rng.normal(size=3) * rng.uniform(0.0, 6.0)
        q = quat_from_rotvec(v)
        v2 = rotvec_from_quat(q)
        assert np.linalg.norm(v2) <= np.pi + 1e-12
        # same rotation even when the angle got wrapped
        assert quat_geodesic_angle(q, quat_from_rotvec(v2)) < 1e-7


def test_rotvec_small_angle():
    v = np.array([1e-14, -2e-14, 3e-15])
    q = quat_from_rotvec(v)
    assert abs(q[0] - 1.0) < 1e-15
    assert np.allclose(rotvec_from_quat(q), v, atol=1e-15)


def test_slerp_endpoints_and_midpoint():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, b = rand_quat(rng), rand_quat(rng)
        assert quat_geodesic_angle(quat_slerp(a, b, 0.0), a) < 1e-7
        assert quat_geodesic_angle(quat_slerp(a, b, 1.0), b) < 1e-7
        mid = quat_slerp(a, b, 0.5)
        assert abs(quat_geodesic_angle(a, mid) - quat_geodesic_angle(mid, b)) < 1e-7


def test_slerp_takes_short_way():
    a = np.array([1.0, 0.0, 0.0, 0.0])
    b = -quat_from_rotvec(np.array([0.0, 0.3, 0.0]))  # same rotation, flipped sign
    mid = quat_slerp(a, b, 0.5)
    assert quat_geodesic_angle(a, mid) < 0.2


def test_heading_yaw_pure_yaw():
    for yaw in np.linspace(-3.0, 3.0, 25):
        assert abs(wrap_angle(heading_yaw(yaw_quat(yaw)) - yaw)) < 1e-12


def test_heading_yaw_equivariant_under_yaw():
    # pre-rotating any orientation by yaw dy shifts its heading by exactly dy
    rng = np.random.default_rng(5)
    for _ in range(200):
        q = rand_quat(rng)
        if q[0] ** 2 + q[2] ** 2 < 1e-6:
            continue
        dy = rng.uniform(-np.pi, np.pi)
        h1 = heading_yaw(q)
        h2 = heading_yaw(quat_mul(yaw_quat(dy), q))
        assert abs(wrap_angle(h2 - h1 - dy)) < 1e-9


def test_heading_yaw_degenerate_is_zero():
    # orientation with zero w and y components (e.g. flat mid-flip)
    q = np.array([0.0, 1.0, 0.0, 0.0])
    assert heading_yaw(q) == 0.0


def test_wrap_angle_range():
    for a in np.linspace(-20.0, 20.0, 400):
        w = wrap_angle(a)
        assert -np.pi < w <= np.pi
        assert abs(np.sin(w) - np.sin(a)) < 1e-12
        assert abs(np.cos(w) - np.cos(a)) < 1e-12


def test_quat_normalize_unit():
    rng = np.random.default_rng(6)
    for _ in range(50):
        q = rng.normal(size=4) * rng.uniform(0.1, 10.0)
        assert abs(np.linalg.norm(quat_normalize(q)) - 1.0) < 1e-12
