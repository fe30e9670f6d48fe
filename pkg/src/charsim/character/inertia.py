"""Inertia authoring helpers: capsule geometry to SpatialInertia."""

import numpy as np

from charsim.dynamics import SpatialInertia


def _axis_frame(u: np.ndarray) -> np.ndarray:
    """Rotation whose third column is u (columns orthonormal)."""
    a = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = np.cross(a, u)
    x /= np.linalg.norm(x)
    y = np.cross(u, x)
    return np.stack([x, y, u], axis=1)


def capsule_inertia(p0, p1, radius: float, density: float = None, mass: float = None) -> SpatialInertia:
    """Solid capsule from p0 to p1 (cap centers), in the link frame.

    Pass either density (kg/m^3) or a target total mass. Degenerates to a
    sphere when p0 == p1.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if radius <= 0.0:
        raise ValueError("capsule radius must be positive")
    if (density is None) == (mass is None):
        raise ValueError("give exactly one of density, mass")

    length = float(np.linalg.norm(p1 - p0))
    r = float(radius)
    v_cyl = np.pi * r * r * length
    v_sph = 4.0 / 3.0 * np.pi * r**3
    if mass is not None:
        density = mass / (v_cyl + v_sph)
    m_cyl = density * v_cyl
    m_sph = density * v_sph  # both hemispherical caps together
    m_h = 0.5 * m_sph

    # about the capsule centroid, symmetry axis = z
    i_axis = 0.5 * m_cyl * r * r + 0.4 * m_sph * r * r
    d = 0.5 * length + 0.375 * r  # centroid-to-hemisphere-CoM distance
    i_trans = (
        m_cyl * (r * r / 4.0 + length * length / 12.0)
        + 2.0 * ((83.0 / 320.0) * m_h * r * r + m_h * d * d)
    )
    inertia_local = np.diag([i_trans, i_trans, i_axis])

    if length > 1e-12:
        rot = _axis_frame((p1 - p0) / length)
        inertia = rot @ inertia_local @ rot.T
    else:
        inertia = 0.4 * (m_cyl + m_sph) * r * r * np.eye(3)
    inertia = 0.5 * (inertia + inertia.T)
    return SpatialInertia(
        mass=m_cyl + m_sph,
        com_offset=0.5 * (p0 + p1),
        rot_inertia=inertia,
    )
