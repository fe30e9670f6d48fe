"""Quaternion / rotation helpers shared by the simulator and the motion code.

Conventions: quaternions are (w, x, y, z) unit arrays, rotation matrices map
local coordinates to world coordinates, rotation vectors (exponential map) are
axis * angle with the canonical angle in [0, pi]. The world is y-up.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def quat_normalize(q):
    n = np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return q / n


@njit(cache=True)
def quat_mul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit(cache=True)
def quat_conj(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@njit(cache=True)
def quat_to_mat(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    m = np.empty((3, 3))
    m[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[0, 1] = 2.0 * (x * y - w * z)
    m[0, 2] = 2.0 * (x * z + w * y)
    m[1, 0] = 2.0 * (x * y + w * z)
    m[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[1, 2] = 2.0 * (y * z - w * x)
    m[2, 0] = 2.0 * (x * z - w * y)
    m[2, 1] = 2.0 * (y * z + w * x)
    m[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


def quat_to_mat_batch(q):
    """Vectorized quat_to_mat: (..., 4) -> (..., 3, 3)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[..., 0, 1] = 2.0 * (x * y - w * z)
    m[..., 0, 2] = 2.0 * (x * z + w * y)
    m[..., 1, 0] = 2.0 * (x * y + w * z)
    m[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[..., 1, 2] = 2.0 * (y * z - w * x)
    m[..., 2, 0] = 2.0 * (x * z - w * y)
    m[..., 2, 1] = 2.0 * (y * z + w * x)
    m[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


@njit(cache=True)
def quat_rotate(q, v):
    # R(q) @ v without building the matrix
    w, x, y, z = q[0], q[1], q[2], q[3]
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    out = np.empty(3)
    out[0] = v[0] + w * tx + (y * tz - z * ty)
    out[1] = v[1] + w * ty + (z * tx - x * tz)
    out[2] = v[2] + w * tz + (x * ty - y * tx)
    return out


@njit(cache=True)
def quat_from_rotvec(v):
    angle = np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    out = np.empty(4)
    if angle < 1e-12:
        out[0] = 1.0
        out[1] = 0.5 * v[0]
        out[2] = 0.5 * v[1]
        out[3] = 0.5 * v[2]
        return quat_normalize(out)
    half = 0.5 * angle
    s = np.sin(half) / angle
    out[0] = np.cos(half)
    out[1] = s * v[0]
    out[2] = s * v[1]
    out[3] = s * v[2]
    return out


@njit(cache=True)
def rotvec_from_quat(q):
    # canonical: angle in [0, pi]
    w, x, y, z = q[0], q[1], q[2], q[3]
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    vn = np.sqrt(x * x + y * y + z * z)
    out = np.empty(3)
    if vn < 1e-12:
        out[0] = 2.0 * x
        out[1] = 2.0 * y
        out[2] = 2.0 * z
        return out
    angle = 2.0 * np.arctan2(vn, w)
    s = angle / vn
    out[0] = s * x
    out[1] = s * y
    out[2] = s * z
    return out


@njit(cache=True)
def mat_to_quat(m):
    t = m[0, 0] + m[1, 1] + m[2, 2]
    q = np.empty(4)
    if t > 0.0:
        r = np.sqrt(1.0 + t)
        s = 0.5 / r
        q[0] = 0.5 * r
        q[1] = (m[2, 1] - m[1, 2]) * s
        q[2] = (m[0, 2] - m[2, 0]) * s
        q[3] = (m[1, 0] - m[0, 1]) * s
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        r = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        s = 0.5 / r
        q[0] = (m[2, 1] - m[1, 2]) * s
        q[1] = 0.5 * r
        q[2] = (m[0, 1] + m[1, 0]) * s
        q[3] = (m[0, 2] + m[2, 0]) * s
    elif m[1, 1] >= m[2, 2]:
        r = np.sqrt(1.0 - m[0, 0] + m[1, 1] - m[2, 2])
        s = 0.5 / r
        q[0] = (m[0, 2] - m[2, 0]) * s
        q[1] = (m[0, 1] + m[1, 0]) * s
        q[2] = 0.5 * r
        q[3] = (m[1, 2] + m[2, 1]) * s
    else:
        r = np.sqrt(1.0 - m[0, 0] - m[1, 1] + m[2, 2])
        s = 0.5 / r
        q[0] = (m[1, 0] - m[0, 1]) * s
        q[1] = (m[0, 2] + m[2, 0]) * s
        q[2] = (m[1, 2] + m[2, 1]) * s
        q[3] = 0.5 * r
    return quat_normalize(q)


@njit(cache=True)
def quat_geodesic_angle(a, b):
    """Rotation angle, in [0, pi], taking orientation a to orientation b."""
    d = abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
    if d > 1.0:
        d = 1.0
    return 2.0 * np.arccos(d)


@njit(cache=True)
def quat_slerp(a, b, t):
    d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    bb = b.copy()
    if d < 0.0:
        d = -d
        bb = -bb
    if d > 0.9995:
        return quat_normalize(a + t * (bb - a))
    theta = np.arccos(d)
    st = np.sin(theta)
    wa = np.sin((1.0 - t) * theta) / st
    wb = np.sin(t * theta) / st
    return quat_normalize(wa * a + wb * bb)


@njit(cache=True)
def heading_yaw(q):
    """Twist of orientation q about the world up axis (y), in radians.

    Degenerate orientations (w and y both ~0, e.g. exactly halfway through a
    planar flip) fall back to 0.
    """
    w, y = q[0], q[2]
    if w * w + y * y < 1e-12:
        return 0.0
    return 2.0 * np.arctan2(y, w)


@njit(cache=True)
def yaw_quat(yaw):
    out = np.empty(4)
    out[0] = np.cos(0.5 * yaw)
    out[1] = 0.0
    out[2] = np.sin(0.5 * yaw)
    out[3] = 0.0
    return out


@njit(cache=True)
def skew(v):
    m = np.zeros((3, 3))
    m[0, 1] = -v[2]
    m[0, 2] = v[1]
    m[1, 0] = v[2]
    m[1, 2] = -v[0]
    m[2, 0] = v[0]
    m[2, 1] = -v[1]
    return m


def wrap_angle(a):
    """Wrap an angle to (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - a, 2.0 * np.pi))
