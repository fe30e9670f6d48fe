"""Jitted dynamics kernels: FK, ABA forward dynamics, RNEA, contact, substeps.

All spatial vectors are angular-first Plucker coordinates. Each link's kernel
frame F sits at its inboard joint anchor (root: at the authored origin), axes
aligned with the link body. Accelerations inside the solvers are "primed":
the uniform gravity field is subtracted (Featherstone's accelerating-frame
trick), so no gravity forces appear in the recursions; the field is added
back when integrating the root.

Matrix products are hand-unrolled loops: BLAS dispatch on 3x3/6x6 operands
costs more than the arithmetic and dominated early profiles.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..rotation import (
    quat_from_rotvec,
    quat_mul,
    quat_normalize,
    quat_to_mat,
    rotvec_from_quat,
)

JTYPE_HINGE = 0
JTYPE_SPHERICAL = 1


@njit(cache=True)
def _mat3_vec(A, x, out):
    for r in range(3):
        out[r] = A[r, 0] * x[0] + A[r, 1] * x[1] + A[r, 2] * x[2]


@njit(cache=True)
def _mat3T_vec(A, x, out):
    for r in range(3):
        out[r] = A[0, r] * x[0] + A[1, r] * x[1] + A[2, r] * x[2]


@njit(cache=True)
def _mat3_mul(A, B, out):
    for r in range(3):
        for c in range(3):
            out[r, c] = A[r, 0] * B[0, c] + A[r, 1] * B[1, c] + A[r, 2] * B[2, c]


@njit(cache=True)
def _quat_to_mat_into(q, out):
    w, x, y, z = q[0], q[1], q[2], q[3]
    out[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    out[0, 1] = 2.0 * (x * y - w * z)
    out[0, 2] = 2.0 * (x * z + w * y)
    out[1, 0] = 2.0 * (x * y + w * z)
    out[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    out[1, 2] = 2.0 * (y * z - w * x)
    out[2, 0] = 2.0 * (x * z - w * y)
    out[2, 1] = 2.0 * (y * z + w * x)
    out[2, 2] = 1.0 - 2.0 * (x * x + y * y)


@njit(cache=True)
def _solve6_spd(M, b, out):
    """Cholesky solve of a 6x6 SPD system; returns False on a bad pivot."""
    L = np.zeros((6, 6))
    for k in range(6):
        s = M[k, k]
        for j in range(k):
            s -= L[k, j] * L[k, j]
        if s <= 1e-300:
            return False
        d = s ** 0.5
        L[k, k] = d
        for i in range(k + 1, 6):
            s = M[i, k]
            for j in range(k):
                s -= L[i, j] * L[k, j]
            L[i, k] = s / d
    # forward then back substitution
    y = np.empty(6)
    for i in range(6):
        s = b[i]
        for j in range(i):
            s -= L[i, j] * y[j]
        y[i] = s / L[i, i]
    for i in range(5, -1, -1):
        s = y[i]
        for j in range(i + 1, 6):
            s -= L[j, i] * out[j]
        out[i] = s / L[i, i]
    return True


@njit(cache=True)
def _inv3(A, out):
    """Analytic 3x3 inverse; returns False when near-singular."""
    a = A[0, 0]
    b = A[0, 1]
    c = A[0, 2]
    d = A[1, 0]
    e = A[1, 1]
    f = A[1, 2]
    g = A[2, 0]
    h = A[2, 1]
    i = A[2, 2]
    A00 = e * i - f * h
    A01 = c * h - b * i
    A02 = b * f - c * e
    det = a * A00 + d * A01 + g * A02
    if abs(det) < 1e-300:
        return False
    inv = 1.0 / det
    out[0, 0] = A00 * inv
    out[0, 1] = A01 * inv
    out[0, 2] = A02 * inv
    out[1, 0] = (f * g - d * i) * inv
    out[1, 1] = (a * i - c * g) * inv
    out[1, 2] = (c * d - a * f) * inv
    out[2, 0] = (d * h - e * g) * inv
    out[2, 1] = (b * g - a * h) * inv
    out[2, 2] = (a * e - b * d) * inv
    return True


@njit(cache=True)
def _joint_rotation_into(jtype_j, axis, q, o, out):
    if jtype_j == JTYPE_HINGE:
        # axis-angle about a unit axis (Rodrigues)
        th = q[o]
        cth = np.cos(th)
        sth = np.sin(th)
        vth = 1.0 - cth
        ax = axis[0]
        ay = axis[1]
        az = axis[2]
        out[0, 0] = cth + ax * ax * vth
        out[0, 1] = ax * ay * vth - az * sth
        out[0, 2] = ax * az * vth + ay * sth
        out[1, 0] = ay * ax * vth + az * sth
        out[1, 1] = cth + ay * ay * vth
        out[1, 2] = ay * az * vth - ax * sth
        out[2, 0] = az * ax * vth - ay * sth
        out[2, 1] = az * ay * vth + ax * sth
        out[2, 2] = cth + az * az * vth
    else:
        rv = np.empty(3)
        rv[0] = q[o]
        rv[1] = q[o + 1]
        rv[2] = q[o + 2]
        _quat_to_mat_into(quat_from_rotvec(rv), out)


@njit(cache=True)
def fk_world_into(parent, jtype, jaxis, dof_off, anchor_parent, root_pos, root_quat, q, R, p):
    """World rotation and origin of every link frame, into R (nl,3,3), p (nl,3)."""
    nl = parent.shape[0]
    _quat_to_mat_into(root_quat, R[0])
    for d in range(3):
        p[0, d] = root_pos[d]
    RJ = np.empty((3, 3))
    for i in range(1, nl):
        j = i - 1
        pa = parent[i]
        _joint_rotation_into(jtype[j], jaxis[j], q, dof_off[j], RJ)
        _mat3_mul(R[pa], RJ, R[i])
        r = anchor_parent[j]
        for d in range(3):
            p[i, d] = p[pa, d] + R[pa, d, 0] * r[0] + R[pa, d, 1] * r[1] + R[pa, d, 2] * r[2]


@njit(cache=True)
def link_world_velocities_into(parent, jtype, jaxis, dof_off, R, p, root_vel, root_omega, qd, omega, vel):
    """World angular velocity and origin-point velocity of every link.

    The linear part is the velocity of the body-fixed material point at the
    link frame origin (same convention as the root state).
    """
    nl = parent.shape[0]
    for d in range(3):
        omega[0, d] = root_omega[d]
        vel[0, d] = root_vel[d]
    wl = np.empty(3)
    for i in range(1, nl):
        j = i - 1
        pa = parent[i]
        r0 = p[i, 0] - p[pa, 0]
        r1 = p[i, 1] - p[pa, 1]
        r2 = p[i, 2] - p[pa, 2]
        vel[i, 0] = vel[pa, 0] + omega[pa, 1] * r2 - omega[pa, 2] * r1
        vel[i, 1] = vel[pa, 1] + omega[pa, 2] * r0 - omega[pa, 0] * r2
        vel[i, 2] = vel[pa, 2] + omega[pa, 0] * r1 - omega[pa, 1] * r0
        o = dof_off[j]
        if jtype[j] == JTYPE_HINGE:
            wl[0] = jaxis[j, 0] * qd[o]
            wl[1] = jaxis[j, 1] * qd[o]
            wl[2] = jaxis[j, 2] * qd[o]
        else:
            wl[0] = qd[o]
            wl[1] = qd[o + 1]
            wl[2] = qd[o + 2]
        for d in range(3):
            omega[i, d] = omega[pa, d] + R[i, d, 0] * wl[0] + R[i, d, 1] * wl[1] + R[i, d, 2] * wl[2]


def _alloc_fk(nl):
    return np.empty((nl, 3, 3)), np.empty((nl, 3))


def fk_world(parent, jtype, jaxis, dof_off, anchor_parent, root_pos, root_quat, q):
    R, p = _alloc_fk(parent.shape[0])
    fk_world_into(parent, jtype, jaxis, dof_off, anchor_parent, root_pos, root_quat, q, R, p)
    return R, p


def link_world_velocities(parent, jtype, jaxis, dof_off, R, p, root_vel, root_omega, qd):
    nl = parent.shape[0]
    omega = np.empty((nl, 3))
    vel = np.empty((nl, 3))
    link_world_velocities_into(parent, jtype, jaxis, dof_off, R, p, root_vel, root_omega, qd, omega, vel)
    return omega, vel


@njit(cache=True)
def com_and_momentum(mass, com, inertia_com, R, p, omega, vel):
    """Aggregate CoM position/velocity and angular momentum about the CoM."""
    nl = mass.shape[0]
    total = 0.0
    cpos = np.zeros(3)
    cvel = np.zeros(3)
    link_c = np.empty((nl, 3))
    link_cv = np.empty((nl, 3))
    rc = np.empty(3)
    for i in range(nl):
        _mat3_vec(R[i], com[i], rc)
        link_c[i, 0] = p[i, 0] + rc[0]
        link_c[i, 1] = p[i, 1] + rc[1]
        link_c[i, 2] = p[i, 2] + rc[2]
        link_cv[i, 0] = vel[i, 0] + omega[i, 1] * rc[2] - omega[i, 2] * rc[1]
        link_cv[i, 1] = vel[i, 1] + omega[i, 2] * rc[0] - omega[i, 0] * rc[2]
        link_cv[i, 2] = vel[i, 2] + omega[i, 0] * rc[1] - omega[i, 1] * rc[0]
        total += mass[i]
        for d in range(3):
            cpos[d] += mass[i] * link_c[i, d]
            cvel[d] += mass[i] * link_cv[i, d]
    for d in range(3):
        cpos[d] /= total
        cvel[d] /= total
    L = np.zeros(3)
    wloc = np.empty(3)
    Iwl = np.empty(3)
    for i in range(nl):
        r0 = link_c[i, 0] - cpos[0]
        r1 = link_c[i, 1] - cpos[1]
        r2 = link_c[i, 2] - cpos[2]
        v0 = link_cv[i, 0] - cvel[0]
        v1 = link_cv[i, 1] - cvel[1]
        v2 = link_cv[i, 2] - cvel[2]
        L[0] += mass[i] * (r1 * v2 - r2 * v1)
        L[1] += mass[i] * (r2 * v0 - r0 * v2)
        L[2] += mass[i] * (r0 * v1 - r1 * v0)
        # R I R^T w without forming the sandwich
        _mat3T_vec(R[i], omega[i], wloc)
        _mat3_vec(inertia_com[i], wloc, Iwl)
        for d in range(3):
            L[d] += R[i, d, 0] * Iwl[0] + R[i, d, 1] * Iwl[1] + R[i, d, 2] * Iwl[2]
    return cpos, cvel, L


@njit(cache=True)
def contact_forces(
    sphere_link, sphere_pos, sphere_radius, ground_h, kn, kdn, mu,
    R, p, omega, vel, f_ext_world,
):
    """Spring-damper sphere/ground forces, accumulated as world wrenches.

    f_ext_world is (nl, 6): (torque about link origin, force), world axes.
    Tangential friction is viscous with the normal damping coefficient and
    clamped to the Coulomb cone mu * normal.
    """
    ns = sphere_link.shape[0]
    cen = np.empty(3)
    for k in range(ns):
        i = sphere_link[k]
        _mat3_vec(R[i], sphere_pos[k], cen)
        cen[0] += p[i, 0]
        cen[1] += p[i, 1]
        cen[2] += p[i, 2]
        depth = ground_h + sphere_radius[k] - cen[1]
        if depth <= 0.0:
            continue
        # contact point at the sphere bottom
        r0 = cen[0] - p[i, 0]
        r1 = cen[1] - sphere_radius[k] - p[i, 1]
        r2 = cen[2] - p[i, 2]
        vc0 = vel[i, 0] + omega[i, 1] * r2 - omega[i, 2] * r1
        vc1 = vel[i, 1] + omega[i, 2] * r0 - omega[i, 0] * r2
        vc2 = vel[i, 2] + omega[i, 0] * r1 - omega[i, 1] * r0
        fn = kn * depth - kdn * vc1
        if fn <= 0.0:
            continue
        ft0 = -kdn * vc0
        ft2 = -kdn * vc2
        fmax = mu * fn
        fmag = (ft0 * ft0 + ft2 * ft2) ** 0.5
        if fmag > fmax:
            s = fmax / fmag
            ft0 *= s
            ft2 *= s
        f_ext_world[i, 0] += r1 * ft2 - r2 * fn
        f_ext_world[i, 1] += r2 * ft0 - r0 * ft2
        f_ext_world[i, 2] += r0 * fn - r1 * ft0
        f_ext_world[i, 3] += ft0
        f_ext_world[i, 4] += fn
        f_ext_world[i, 5] += ft2


@njit(cache=True)
def _world_to_local_forces(nl, R, f_ext_world):
    """Rotate world wrenches (already about each link's origin) to link coords."""
    out = np.zeros((nl, 6))
    t = np.empty(3)
    for i in range(nl):
        _mat3T_vec(R[i], f_ext_world[i, :3], t)
        out[i, 0] = t[0]
        out[i, 1] = t[1]
        out[i, 2] = t[2]
        _mat3T_vec(R[i], f_ext_world[i, 3:], t)
        out[i, 3] = t[0]
        out[i, 4] = t[1]
        out[i, 5] = t[2]
    return out


@njit(cache=True)
def _crm_into(v, m, out):
    """Spatial motion cross product v x m."""
    out[0] = v[1] * m[2] - v[2] * m[1]
    out[1] = v[2] * m[0] - v[0] * m[2]
    out[2] = v[0] * m[1] - v[1] * m[0]
    out[3] = v[4] * m[2] - v[5] * m[1] + v[1] * m[5] - v[2] * m[4]
    out[4] = v[5] * m[0] - v[3] * m[2] + v[2] * m[3] - v[0] * m[5]
    out[5] = v[3] * m[1] - v[4] * m[0] + v[0] * m[4] - v[1] * m[3]


@njit(cache=True)
def _crf_into(v, f, out):
    """Spatial force cross product v x* f."""
    out[0] = v[1] * f[2] - v[2] * f[1] + v[4] * f[5] - v[5] * f[4]
    out[1] = v[2] * f[0] - v[0] * f[2] + v[5] * f[3] - v[3] * f[5]
    out[2] = v[0] * f[1] - v[1] * f[0] + v[3] * f[4] - v[4] * f[3]
    out[3] = v[1] * f[5] - v[2] * f[4]
    out[4] = v[2] * f[3] - v[0] * f[5]
    out[5] = v[0] * f[4] - v[1] * f[3]


@njit(cache=True)
def _ispatial_vec(I, v, out):
    for r in range(6):
        s = 0.0
        for c2 in range(6):
            s += I[r, c2] * v[c2]
        out[r] = s


@njit(cache=True)
def _xform_into(E, r, X):
    """Motion transform [[E,0],[-E r^, E]] into a 6x6 buffer."""
    for a in range(3):
        for b in range(3):
            X[a, b] = E[a, b]
            X[a, 3 + b] = 0.0
            X[3 + a, 3 + b] = E[a, b]
    # lower-left: -E @ skew(r)
    for a in range(3):
        X[3 + a, 0] = -(E[a, 1] * r[2] - E[a, 2] * r[1])
        X[3 + a, 1] = -(E[a, 2] * r[0] - E[a, 0] * r[2])
        X[3 + a, 2] = -(E[a, 0] * r[1] - E[a, 1] * r[0])


@njit(cache=True)
def _x_apply(X, v, out):
    for r in range(6):
        s = 0.0
        for c2 in range(6):
            s += X[r, c2] * v[c2]
        out[r] = s


@njit(cache=True)
def _xT_apply(X, v, out):
    for r in range(6):
        s = 0.0
        for c2 in range(6):
            s += X[c2, r] * v[c2]
        out[r] = s


@njit(cache=True)
def _congruence_add(X, Ia, acc):
    """acc += X^T @ Ia @ X for 6x6 operands."""
    T = np.empty((6, 6))
    for r in range(6):
        for c2 in range(6):
            s = 0.0
            for k in range(6):
                s += Ia[r, k] * X[k, c2]
            T[r, c2] = s
    for r in range(6):
        for c2 in range(6):
            s = 0.0
            for k in range(6):
                s += X[k, r] * T[k, c2]
            acc[r, c2] += s


@njit(cache=True)
def _local_state_into(
    parent, jtype, jaxis, dof_off, anchor_parent, root_quat, q, qd,
    root_vel, root_omega, E, v,
):
    """Joint coordinate rotations (parent->child) and local spatial velocities."""
    nl = parent.shape[0]
    RJ = np.empty((3, 3))
    R0 = np.empty((3, 3))
    _quat_to_mat_into(root_quat, R0)
    t = np.empty(3)
    _mat3T_vec(R0, root_omega, t)
    v[0, 0] = t[0]
    v[0, 1] = t[1]
    v[0, 2] = t[2]
    _mat3T_vec(R0, root_vel, t)
    v[0, 3] = t[0]
    v[0, 4] = t[1]
    v[0, 5] = t[2]
    vl = np.empty(3)
    for i in range(1, nl):
        j = i - 1
        pa = parent[i]
        _joint_rotation_into(jtype[j], jaxis[j], q, dof_off[j], RJ)
        for a in range(3):
            for b in range(3):
                E[j, a, b] = RJ[b, a]
        r = anchor_parent[j]
        w0 = v[pa, 0]
        w1 = v[pa, 1]
        w2 = v[pa, 2]
        vl[0] = v[pa, 3] - (r[1] * w2 - r[2] * w1)
        vl[1] = v[pa, 4] - (r[2] * w0 - r[0] * w2)
        vl[2] = v[pa, 5] - (r[0] * w1 - r[1] * w0)
        for d in range(3):
            v[i, d] = E[j, d, 0] * w0 + E[j, d, 1] * w1 + E[j, d, 2] * w2
            v[i, 3 + d] = E[j, d, 0] * vl[0] + E[j, d, 1] * vl[1] + E[j, d, 2] * vl[2]
        o = dof_off[j]
        if jtype[j] == JTYPE_HINGE:
            v[i, 0] += jaxis[j, 0] * qd[o]
            v[i, 1] += jaxis[j, 1] * qd[o]
            v[i, 2] += jaxis[j, 2] * qd[o]
        else:
            v[i, 0] += qd[o]
            v[i, 1] += qd[o + 1]
            v[i, 2] += qd[o + 2]


@njit(cache=True)
def _aba_core(
    parent, jtype, jaxis, dof_off, anchor_parent, ispatial,
    root_quat, q, qd, root_vel, root_omega,
    tau0, kddt, tau_max, do_clamp, f_local,
    # workspace
    E, v, c, pA0, X, IA, pA, UT_all, Dinv_all, u_all, mode, a, qdd, tau_applied,
):
    """ABA with implicit drive damping and torque-clamp re-solve.

    Writes the primed root spatial acceleration into a[0], joint
    accelerations into qdd and applied drive torques into tau_applied.
    Returns False if an inertia factorization failed (diverged state).
    """
    nl = parent.shape[0]
    nd = qd.shape[0]
    _local_state_into(
        parent, jtype, jaxis, dof_off, anchor_parent, root_quat, q, qd,
        root_vel, root_omega, E, v,
    )
    vJ = np.empty(6)
    tmp6 = np.empty(6)
    for i in range(1, nl):
        j = i - 1
        o = dof_off[j]
        for d in range(6):
            vJ[d] = 0.0
        if jtype[j] == JTYPE_HINGE:
            vJ[0] = jaxis[j, 0] * qd[o]
            vJ[1] = jaxis[j, 1] * qd[o]
            vJ[2] = jaxis[j, 2] * qd[o]
        else:
            vJ[0] = qd[o]
            vJ[1] = qd[o + 1]
            vJ[2] = qd[o + 2]
        _crm_into(v[i], vJ, c[i])
        _xform_into(E[j], anchor_parent[j], X[j])
    for i in range(nl):
        _ispatial_vec(ispatial[i], v[i], tmp6)
        _crf_into(v[i], tmp6, pA0[i])
        for d in range(6):
            pA0[i, d] -= f_local[i, d]

    for k in range(nd):
        mode[k] = 0

    Ia = np.empty((6, 6))
    pa_f = np.empty(6)
    Dinv3 = np.empty((3, 3))
    D3 = np.empty((3, 3))
    uu = np.empty(3)
    U1 = np.empty(6)
    ai = np.empty(6)
    rhs = np.empty(3)

    for _iteration in range(4):
        for i in range(nl):
            for r in range(6):
                for c2 in range(6):
                    IA[i, r, c2] = ispatial[i, r, c2]
                pA[i, r] = pA0[i, r]

        for i in range(nl - 1, 0, -1):
            j = i - 1
            o = dof_off[j]
            pa = parent[i]
            if jtype[j] == JTYPE_HINGE:
                a0 = jaxis[j, 0]
                a1 = jaxis[j, 1]
                a2 = jaxis[j, 2]
                for r in range(6):
                    U1[r] = IA[i, r, 0] * a0 + IA[i, r, 1] * a1 + IA[i, r, 2] * a2
                kdd = kddt[o] if mode[o] == 0 else 0.0
                D = a0 * U1[0] + a1 * U1[1] + a2 * U1[2] + kdd
                t_eff = tau0[o] if mode[o] == 0 else mode[o] * tau_max[o]
                u_s = t_eff - (a0 * pA[i, 0] + a1 * pA[i, 1] + a2 * pA[i, 2])
                Dinv = 1.0 / D
                for r in range(6):
                    UT_all[j, 0, r] = U1[r]
                Dinv_all[j, 0, 0] = Dinv
                u_all[j, 0] = u_s
                for r in range(6):
                    for c2 in range(6):
                        Ia[r, c2] = IA[i, r, c2] - U1[r] * Dinv * U1[c2]
                coef = Dinv * u_s
                for r in range(6):
                    s = pA[i, r] + U1[r] * coef
                    for c2 in range(6):
                        s += Ia[r, c2] * c[i, c2]
                    pa_f[r] = s
            else:
                for d in range(3):
                    for r in range(6):
                        UT_all[j, d, r] = IA[i, r, d]
                for r in range(3):
                    for c2 in range(3):
                        D3[r, c2] = IA[i, r, c2]
                for d in range(3):
                    if mode[o + d] == 0:
                        D3[d, d] += kddt[o + d]
                        uu[d] = tau0[o + d] - pA[i, d]
                    else:
                        uu[d] = mode[o + d] * tau_max[o + d] - pA[i, d]
                if not _inv3(D3, Dinv3):
                    return False
                for r in range(3):
                    for c2 in range(3):
                        Dinv_all[j, r, c2] = Dinv3[r, c2]
                    u_all[j, r] = uu[r]
                # Ia = IA - U Dinv U^T ; pa_f = pA + Ia c + U Dinv u
                for r in range(6):
                    for c2 in range(6):
                        s = IA[i, r, c2]
                        for d1 in range(3):
                            for d2 in range(3):
                                s -= UT_all[j, d1, r] * Dinv3[d1, d2] * UT_all[j, d2, c2]
                        Ia[r, c2] = s
                for r in range(6):
                    s = pA[i, r]
                    for c2 in range(6):
                        s += Ia[r, c2] * c[i, c2]
                    for d1 in range(3):
                        for d2 in range(3):
                            s += UT_all[j, d1, r] * Dinv3[d1, d2] * uu[d2]
                    pa_f[r] = s
            _congruence_add(X[j], Ia, IA[pa])
            _xT_apply(X[j], pa_f, tmp6)
            for r in range(6):
                pA[pa, r] += tmp6[r]

        for r in range(6):
            tmp6[r] = -pA[0, r]
        if not _solve6_spd(IA[0], tmp6, a[0]):
            return False
        for i in range(1, nl):
            j = i - 1
            o = dof_off[j]
            _x_apply(X[j], a[parent[i]], ai)
            for r in range(6):
                ai[r] += c[i, r]
            if jtype[j] == JTYPE_HINGE:
                s = 0.0
                for r in range(6):
                    s += UT_all[j, 0, r] * ai[r]
                qdd_j = Dinv_all[j, 0, 0] * (u_all[j, 0] - s)
                qdd[o] = qdd_j
                ai[0] += jaxis[j, 0] * qdd_j
                ai[1] += jaxis[j, 1] * qdd_j
                ai[2] += jaxis[j, 2] * qdd_j
                if mode[o] == 0:
                    tau_applied[o] = tau0[o] - kddt[o] * qdd_j
                else:
                    tau_applied[o] = mode[o] * tau_max[o]
            else:
                for d in range(3):
                    s = 0.0
                    for r in range(6):
                        s += UT_all[j, d, r] * ai[r]
                    rhs[d] = u_all[j, d] - s
                for d in range(3):
                    qdd_d = (
                        Dinv_all[j, d, 0] * rhs[0]
                        + Dinv_all[j, d, 1] * rhs[1]
                        + Dinv_all[j, d, 2] * rhs[2]
                    )
                    qdd[o + d] = qdd_d
                for d in range(3):
                    ai[d] += qdd[o + d]
                    if mode[o + d] == 0:
                        tau_applied[o + d] = tau0[o + d] - kddt[o + d] * qdd[o + d]
                    else:
                        tau_applied[o + d] = mode[o + d] * tau_max[o + d]
            for r in range(6):
                a[i, r] = ai[r]

        if not do_clamp:
            break
        changed = False
        for k in range(nd):
            if mode[k] == 0 and abs(tau_applied[k]) > tau_max[k] * (1.0 + 1e-12):
                mode[k] = 1 if tau_applied[k] > 0.0 else -1
                changed = True
        if not changed:
            break
    return True


@njit(cache=True)
def _alloc_aba_ws(nl, nd):
    nj = nl - 1
    E = np.empty((nj, 3, 3))
    v = np.empty((nl, 6))
    c = np.zeros((nl, 6))
    pA0 = np.empty((nl, 6))
    X = np.empty((nj, 6, 6))
    IA = np.empty((nl, 6, 6))
    pA = np.empty((nl, 6))
    UT_all = np.zeros((nj, 3, 6))
    Dinv_all = np.zeros((nj, 3, 3))
    u_all = np.zeros((nj, 3))
    mode = np.zeros(nd, dtype=np.int32)
    a = np.zeros((nl, 6))
    qdd = np.zeros(nd)
    tau_applied = np.zeros(nd)
    return E, v, c, pA0, X, IA, pA, UT_all, Dinv_all, u_all, mode, a, qdd, tau_applied


@njit(cache=True)
def aba_solve(
    parent, jtype, jaxis, dof_off, anchor_parent, ispatial,
    root_quat, q, qd, root_vel, root_omega,
    tau0, kddt, tau_max, do_clamp, f_local,
):
    """One-shot ABA; returns (primed root spatial accel, qdd, applied torques)."""
    ws = _alloc_aba_ws(parent.shape[0], qd.shape[0])
    ok = _aba_core(
        parent, jtype, jaxis, dof_off, anchor_parent, ispatial,
        root_quat, q, qd, root_vel, root_omega,
        tau0, kddt, tau_max, do_clamp, f_local, *ws,
    )
    a = ws[11]
    qdd = ws[12]
    tau_applied = ws[13]
    if not ok:
        for k in range(qdd.shape[0]):
            qdd[k] = np.nan
        for d in range(6):
            a[0, d] = np.nan
    return a[0], qdd, tau_applied


@njit(cache=True)
def rnea(
    parent, jtype, jaxis, dof_off, anchor_parent, ispatial,
    root_quat, q, qd, root_vel, root_omega,
    a0p, qdd, f_local,
):
    """Inverse dynamics in primed accelerations (no gravity terms).

    Given the primed root spatial acceleration and joint accelerations,
    returns the root wrench residual (local coords) and the per-DOF torques
    required, with external local wrenches f_local applied.
    """
    nl = parent.shape[0]
    nj = nl - 1
    E = np.empty((nj, 3, 3))
    v = np.empty((nl, 6))
    _local_state_into(
        parent, jtype, jaxis, dof_off, anchor_parent, root_quat, q, qd,
        root_vel, root_omega, E, v,
    )
    a = np.empty((nl, 6))
    f = np.empty((nl, 6))
    X = np.empty((nj, 6, 6))
    tmp6 = np.empty(6)
    cterm = np.empty(6)
    vJ = np.empty(6)
    for d in range(6):
        a[0, d] = a0p[d]
    _ispatial_vec(ispatial[0], v[0], tmp6)
    _crf_into(v[0], tmp6, f[0])
    _ispatial_vec(ispatial[0], a[0], tmp6)
    for d in range(6):
        f[0, d] += tmp6[d] - f_local[0, d]
    for i in range(1, nl):
        j = i - 1
        o = dof_off[j]
        _xform_into(E[j], anchor_parent[j], X[j])
        for d in range(6):
            vJ[d] = 0.0
        if jtype[j] == JTYPE_HINGE:
            vJ[0] = jaxis[j, 0] * qd[o]
            vJ[1] = jaxis[j, 1] * qd[o]
            vJ[2] = jaxis[j, 2] * qd[o]
        else:
            vJ[0] = qd[o]
            vJ[1] = qd[o + 1]
            vJ[2] = qd[o + 2]
        _crm_into(v[i], vJ, cterm)
        _x_apply(X[j], a[parent[i]], tmp6)
        for d in range(6):
            a[i, d] = tmp6[d] + cterm[d]
        if jtype[j] == JTYPE_HINGE:
            a[i, 0] += jaxis[j, 0] * qdd[o]
            a[i, 1] += jaxis[j, 1] * qdd[o]
            a[i, 2] += jaxis[j, 2] * qdd[o]
        else:
            a[i, 0] += qdd[o]
            a[i, 1] += qdd[o + 1]
            a[i, 2] += qdd[o + 2]
        _ispatial_vec(ispatial[i], v[i], tmp6)
        _crf_into(v[i], tmp6, f[i])
        _ispatial_vec(ispatial[i], a[i], tmp6)
        for d in range(6):
            f[i, d] += tmp6[d] - f_local[i, d]
    tau = np.zeros(qd.shape[0])
    for i in range(nl - 1, 0, -1):
        j = i - 1
        o = dof_off[j]
        if jtype[j] == JTYPE_HINGE:
            tau[o] = jaxis[j, 0] * f[i, 0] + jaxis[j, 1] * f[i, 1] + jaxis[j, 2] * f[i, 2]
        else:
            tau[o] = f[i, 0]
            tau[o + 1] = f[i, 1]
            tau[o + 2] = f[i, 2]
        _xT_apply(X[j], f[i], tmp6)
        for d in range(6):
            f[parent[i], d] += tmp6[d]
    return f[0], tau


@njit(cache=True)
def integrate_substep(
    jtype, dof_off, limit_lo, limit_hi, planar, gravity, dt,
    root_pos, root_quat, root_vel, root_omega, q, qd, a0p, qdd,
):
    """Semi-implicit Euler update of one articulation state, in place."""
    R0 = np.empty((3, 3))
    _quat_to_mat_into(root_quat, R0)
    ang = np.empty(3)
    lin = np.empty(3)
    _mat3_vec(R0, a0p[:3], ang)
    _mat3_vec(R0, a0p[3:], lin)
    # material acceleration of the root-origin point
    lin[0] += gravity[0] + root_omega[1] * root_vel[2] - root_omega[2] * root_vel[1]
    lin[1] += gravity[1] + root_omega[2] * root_vel[0] - root_omega[0] * root_vel[2]
    lin[2] += gravity[2] + root_omega[0] * root_vel[1] - root_omega[1] * root_vel[0]
    for d in range(3):
        root_omega[d] += dt * ang[d]
        root_vel[d] += dt * lin[d]
    nd = qd.shape[0]
    for k in range(nd):
        qd[k] += dt * qdd[k]

    if planar:
        root_omega[0] = 0.0
        root_omega[1] = 0.0
        root_vel[2] = 0.0

    for d in range(3):
        root_pos[d] += dt * root_vel[d]
    rv = np.empty(3)
    rv[0] = root_omega[0] * dt
    rv[1] = root_omega[1] * dt
    rv[2] = root_omega[2] * dt
    new_quat = quat_normalize(quat_mul(quat_from_rotvec(rv), root_quat))
    for d in range(4):
        root_quat[d] = new_quat[d]

    nj = jtype.shape[0]
    for j in range(nj):
        o = dof_off[j]
        if jtype[j] == JTYPE_HINGE:
            q[o] += dt * qd[o]
        else:
            rv[0] = q[o]
            rv[1] = q[o + 1]
            rv[2] = q[o + 2]
            w = np.empty(3)
            w[0] = qd[o] * dt
            w[1] = qd[o + 1] * dt
            w[2] = qd[o + 2] * dt
            # body-frame increment keeps qd the local angular velocity;
            # the log map also rescales back inside |theta| <= pi
            qj = quat_mul(quat_from_rotvec(rv), quat_from_rotvec(w))
            rv_new = rotvec_from_quat(quat_normalize(qj))
            q[o] = rv_new[0]
            q[o + 1] = rv_new[1]
            q[o + 2] = rv_new[2]

    for k in range(nd):
        if q[k] < limit_lo[k]:
            q[k] = limit_lo[k]
            qd[k] = 0.0
        elif q[k] > limit_hi[k]:
            q[k] = limit_hi[k]
            qd[k] = 0.0

    if planar:
        root_pos[2] = 0.0
        # keep only the rotation about the z axis
        n = (root_quat[0] * root_quat[0] + root_quat[3] * root_quat[3]) ** 0.5
        if n > 1e-12:
            root_quat[0] /= n
            root_quat[1] = 0.0
            root_quat[2] = 0.0
            root_quat[3] /= n


@njit(cache=True)
def _state_finite_and_bounded(root_pos, root_quat, root_vel, root_omega, q, qd):
    ok = True
    for d in range(3):
        if not (abs(root_pos[d]) < 1e6 and abs(root_vel[d]) < 1e6 and abs(root_omega[d]) < 1e6):
            ok = False
    for d in range(4):
        if not abs(root_quat[d]) < 1e6:
            ok = False
    for k in range(q.shape[0]):
        if not (abs(q[k]) < 1e6 and abs(qd[k]) < 1e6):
            ok = False
    return ok


@njit(cache=True)
def run_substeps(
    parent, jtype, jaxis, dof_off, anchor_parent, ispatial,
    limit_lo, limit_hi,
    sphere_link, sphere_pos, sphere_radius,
    planar, ground_h, contact_kn, contact_kd, friction_mu, gravity,
    root_pos, root_quat, root_vel, root_omega, q, qd,
    targets, kp_eff, kd_eff, tau_max,
    n_substeps, dt,
):
    """Advance the state by n_substeps of implicit-PD dynamics, in place.

    Returns -1 on success or the index of the substep where the state left
    the sane range.
    """
    nl = parent.shape[0]
    nd = qd.shape[0]
    ws = _alloc_aba_ws(nl, nd)
    a = ws[11]
    qdd = ws[12]
    R = np.empty((nl, 3, 3))
    p = np.empty((nl, 3))
    omega = np.empty((nl, 3))
    vel = np.empty((nl, 3))
    f_ext_world = np.empty((nl, 6))
    tau0 = np.empty(nd)
    kddt = np.empty(nd)
    for s in range(n_substeps):
        fk_world_into(parent, jtype, jaxis, dof_off, anchor_parent, root_pos, root_quat, q, R, p)
        link_world_velocities_into(
            parent, jtype, jaxis, dof_off, R, p, root_vel, root_omega, qd, omega, vel
        )
        for i in range(nl):
            for d in range(6):
                f_ext_world[i, d] = 0.0
        if sphere_link.shape[0] > 0:
            contact_forces(
                sphere_link, sphere_pos, sphere_radius,
                ground_h, contact_kn, contact_kd, friction_mu,
                R, p, omega, vel, f_ext_world,
            )
        f_local = _world_to_local_forces(nl, R, f_ext_world)
        for k in range(nd):
            tau0[k] = kp_eff[k] * (targets[k] - q[k]) - kd_eff[k] * qd[k]
            kddt[k] = kd_eff[k] * dt
        ok = _aba_core(
            parent, jtype, jaxis, dof_off, anchor_parent, ispatial,
            root_quat, q, qd, root_vel, root_omega,
            tau0, kddt, tau_max, True, f_local, *ws,
        )
        if not ok:
            return s
        integrate_substep(
            jtype, dof_off, limit_lo, limit_hi, planar, gravity, dt,
            root_pos, root_quat, root_vel, root_omega, q, qd, a[0], qdd,
        )
        if not _state_finite_and_bounded(root_pos, root_quat, root_vel, root_omega, q, qd):
            return s
    return -1
