"""Python-facing dynamics API over the jitted kernels."""

from __future__ import annotations

import numpy as np

from . import kernels
from .arrays import ModelArrays
from .types import (
    ArticulationState,
    JointModel,
    ModelValidationError,
    NonFiniteInputError,
    SimulationDivergedError,
    CONTROL_DT,
    PHYSICS_DT,
)


def _arrays(model) -> ModelArrays:
    if isinstance(model, ModelArrays):
        return model
    return model.arrays


def _check_finite_state(m: ModelArrays, state: ArticulationState) -> None:
    # fast path first; the per-field loop below only runs to name the offender
    if (np.isfinite(state.root_position).all()
            and np.isfinite(state.root_orientation).all()
            and np.isfinite(state.root_lin_vel).all()
            and np.isfinite(state.root_ang_vel).all()
            and np.isfinite(state.joint_q).all()
            and np.isfinite(state.joint_qd).all()):
        return
    for name, val in (
        ("root position", state.root_position),
        ("root orientation", state.root_orientation),
        ("root linear velocity", state.root_lin_vel),
        ("root angular velocity", state.root_ang_vel),
    ):
        if not np.all(np.isfinite(val)):
            raise NonFiniteInputError(f"non-finite {name} on link {m.link_names[0]!r}")
    for j, sl in m.dof_slices():
        if not np.all(np.isfinite(state.joint_q[sl])) or not np.all(
            np.isfinite(state.joint_qd[sl])
        ):
            raise NonFiniteInputError(f"non-finite state at joint {m.joint_names[j]!r}")
    raise NonFiniteInputError("non-finite state")


def _check_finite_inputs(m: ModelArrays, torques, external_forces) -> None:
    if np.isfinite(torques).all() and (
            external_forces is None or np.isfinite(external_forces).all()):
        return
    for j, sl in m.dof_slices():
        if not np.all(np.isfinite(torques[sl])):
            raise NonFiniteInputError(f"non-finite torque at joint {m.joint_names[j]!r}")
    if external_forces is not None:
        for i in range(m.nl):
            if not np.all(np.isfinite(external_forces[i])):
                raise NonFiniteInputError(f"non-finite external force on link {m.link_names[i]!r}")
    raise NonFiniteInputError("non-finite inputs")


def _local_external(m: ModelArrays, state: ArticulationState, external_forces) -> np.ndarray:
    """World wrenches (torque about link origin, force) -> link-local wrenches."""
    if external_forces is None:
        return np.zeros((m.nl, 6))
    ext = np.asarray(external_forces, dtype=float)
    if ext.shape != (m.nl, 6):
        raise ValueError(f"external_forces must be ({m.nl}, 6), got {ext.shape}")
    R, _p = kernels.fk_world(
        m.parent, m.jtype, m.jaxis, m.dof_off, m.anchor_parent,
        state.root_position, state.root_orientation, state.joint_q,
    )
    return kernels._world_to_local_forces(m.nl, R, ext)


def _root_accel_world(m: ModelArrays, state: ArticulationState, a0p: np.ndarray):
    from ..rotation import quat_to_mat

    R0 = quat_to_mat(state.root_orientation)
    ang = R0 @ a0p[:3]
    lin = R0 @ a0p[3:] + m.gravity + np.cross(state.root_ang_vel, state.root_lin_vel)
    return ang, lin


def forward_dynamics(model, state: ArticulationState, joint_torques, external_forces=None):
    """Accelerations for given explicit torques and world external wrenches.

    Returns (qdd, root angular acceleration, root linear acceleration), the
    root parts world-frame; the linear one is the acceleration of the
    body-fixed point at the root origin, i.e. d/dt of root_lin_vel.
    """
    m = _arrays(model)
    torques = np.asarray(joint_torques, dtype=float)
    if torques.shape != (m.nd,):
        raise ValueError(f"joint_torques must have shape ({m.nd},), got {torques.shape}")
    _check_finite_state(m, state)
    _check_finite_inputs(m, torques, external_forces)
    f_local = _local_external(m, state, external_forces)
    a0p, qdd, _tau = kernels.aba_solve(
        m.parent, m.jtype, m.jaxis, m.dof_off, m.anchor_parent, m.ispatial,
        state.root_orientation, state.joint_q, state.joint_qd,
        state.root_lin_vel, state.root_ang_vel,
        torques, np.zeros(m.nd), m.tau_max, False, f_local,
    )
    if not (np.all(np.isfinite(a0p)) and np.all(np.isfinite(qdd))):
        raise ModelValidationError("articulated inertia factorization failed")
    ang, lin = _root_accel_world(m, state, a0p)
    return qdd, ang, lin


def probe_mass_matrix(model, state: ArticulationState) -> np.ndarray:
    """(6+nd) x (6+nd) generalized mass matrix by unit-acceleration probing.

    Generalized coordinates are (root local spatial acceleration, qdd).
    Probed at zero velocity with no external forces, so each RNEA call
    returns exactly one column of M.
    """
    m = _arrays(model)
    n = 6 + m.nd
    M = np.empty((n, n))
    zeros_v = np.zeros(3)
    zeros_f = np.zeros((m.nl, 6))
    qd0 = np.zeros(m.nd)
    for k in range(n):
        a0p = np.zeros(6)
        qdd = np.zeros(m.nd)
        if k < 6:
            a0p[k] = 1.0
        else:
            qdd[k - 6] = 1.0
        f0, tau = kernels.rnea(
            m.parent, m.jtype, m.jaxis, m.dof_off, m.anchor_parent, m.ispatial,
            state.root_orientation, state.joint_q, qd0, zeros_v, zeros_v,
            a0p, qdd, zeros_f,
        )
        M[:6, k] = f0
        M[6:, k] = tau
    return M


def dense_oracle_dynamics(model, state: ArticulationState, joint_torques, external_forces=None):
    """Same contract as forward_dynamics via dense mass matrix + RNEA bias."""
    m = _arrays(model)
    torques = np.asarray(joint_torques, dtype=float)
    if torques.shape != (m.nd,):
        raise ValueError(f"joint_torques must have shape ({m.nd},), got {torques.shape}")
    _check_finite_state(m, state)
    _check_finite_inputs(m, torques, external_forces)
    f_local = _local_external(m, state, external_forces)
    M = probe_mass_matrix(m, state)
    bias_f0, bias_tau = kernels.rnea(
        m.parent, m.jtype, m.jaxis, m.dof_off, m.anchor_parent, m.ispatial,
        state.root_orientation, state.joint_q, state.joint_qd,
        state.root_lin_vel, state.root_ang_vel,
        np.zeros(6), np.zeros(m.nd), f_local,
    )
    rhs = np.concatenate((-bias_f0, torques - bias_tau))
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise ModelValidationError("singular mass matrix, inertia is invalid") from exc
    a0p = sol[:6]
    qdd = sol[6:]
    ang, lin = _root_accel_world(m, state, a0p)
    return qdd, ang, lin


def pd_torque(
    joint: JointModel,
    q,
    qd,
    target,
    stiffness_override=None,
    damping_override=None,
    dt: float = PHYSICS_DT,
    effective_inertia: float = 1.0,
) -> np.ndarray:
    """Clamped drive torque, with damping taken against the next-step velocity.

    Solves tau = kp (target - q) - kd (qd + dt * tau / effective_inertia) per
    DOF, which is the scalar analogue of how `step` folds kd * dt into the
    joint-space inertia, then clamps to max_torque. The full solver uses the
    true articulated inertia; the scalar form here is for inspection and
    direct torque computation.
    """
    kp = joint.stiffness if stiffness_override is None else float(stiffness_override)
    kd = joint.damping if damping_override is None else float(damping_override)
    if kp < 0.0 or kd < 0.0:
        raise ValueError("gain overrides must be >= 0")
    q = np.atleast_1d(np.asarray(q, dtype=float))
    qd = np.atleast_1d(np.asarray(qd, dtype=float))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    tau = (kp * (target - q) - kd * qd) / (1.0 + kd * dt / effective_inertia)
    return np.clip(tau, -joint.max_torque, joint.max_torque)


def step(
    model,
    state: ArticulationState,
    targets,
    drive_overrides=None,
    control_dt: float = CONTROL_DT,
) -> ArticulationState:
    """Advance one control period of implicit-PD dynamics.

    targets is per-DOF; drive_overrides is an optional (stiffness, damping)
    pair of per-DOF arrays replacing the model gains for this call. Raises
    SimulationDivergedError when any state value leaves |x| < 1e6.
    """
    m = _arrays(model)
    n_sub = control_dt / PHYSICS_DT
    if abs(n_sub - round(n_sub)) > 1e-9 or round(n_sub) < 1:
        raise ValueError(f"control_dt {control_dt} is not a multiple of the physics dt")
    n_sub = int(round(n_sub))
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (m.nd,):
        raise ValueError(f"targets must have shape ({m.nd},), got {targets.shape}")
    _check_finite_state(m, state)
    if drive_overrides is None:
        kp_eff, kd_eff = m.kp, m.kd
    else:
        kp_eff = np.asarray(drive_overrides[0], dtype=float)
        kd_eff = np.asarray(drive_overrides[1], dtype=float)
        if kp_eff.shape != (m.nd,) or kd_eff.shape != (m.nd,):
            raise ValueError("drive overrides must be per-DOF arrays")
        if np.any(kp_eff < 0.0) or np.any(kd_eff < 0.0):
            raise ValueError("drive overrides must be >= 0")

    out = state.copy()
    bad = kernels.run_substeps(
        m.parent, m.jtype, m.jaxis, m.dof_off, m.anchor_parent, m.ispatial,
        m.limit_lo, m.limit_hi,
        m.sphere_link, m.sphere_pos, m.sphere_radius,
        m.planar, m.ground_height, m.contact_kn, m.contact_kd, m.friction_mu,
        m.gravity,
        out.root_position, out.root_orientation, out.root_lin_vel, out.root_ang_vel,
        out.joint_q, out.joint_qd,
        targets, kp_eff, kd_eff, m.tau_max,
        n_sub, PHYSICS_DT,
    )
    if bad >= 0:
        raise SimulationDivergedError(f"simulation exploded at substep {bad}", bad)
    return out


def link_kinematics(model, state: ArticulationState):
    """World (R, p, omega, v_origin) for every link."""
    m = _arrays(model)
    R, p = kernels.fk_world(
        m.parent, m.jtype, m.jaxis, m.dof_off, m.anchor_parent,
        state.root_position, state.root_orientation, state.joint_q,
    )
    omega, vel = kernels.link_world_velocities(
        m.parent, m.jtype, m.jaxis, m.dof_off, R, p,
        state.root_lin_vel, state.root_ang_vel, state.joint_qd,
    )
    return R, p, omega, vel


def center_of_mass(model, state: ArticulationState):
    m = _arrays(model)
    R, p, omega, vel = link_kinematics(m, state)
    cpos, cvel, _L = kernels.com_and_momentum(m.mass, m.com, m.inertia_com, R, p, omega, vel)
    return cpos, cvel


def angular_momentum(model, state: ArticulationState) -> np.ndarray:
    m = _arrays(model)
    R, p, omega, vel = link_kinematics(m, state)
    _cpos, _cvel, L = kernels.com_and_momentum(m.mass, m.com, m.inertia_com, R, p, omega, vel)
    return L


def linear_momentum(model, state: ArticulationState) -> np.ndarray:
    m = _arrays(model)
    _cpos, cvel = center_of_mass(m, state)
    return m.total_mass * cvel


def total_energy(model, state: ArticulationState) -> float:
    """Kinetic plus gravitational potential energy, for conservation tests."""
    m = _arrays(model)
    R, p, omega, vel = link_kinematics(m, state)
    e = 0.0
    for i in range(m.nl):
        rc = R[i] @ m.com[i]
        v_com = vel[i] + np.cross(omega[i], rc)
        Iw = R[i] @ m.inertia_com[i] @ R[i].T
        e += 0.5 * m.mass[i] * float(v_com @ v_com)
        e += 0.5 * float(omega[i] @ Iw @ omega[i])
        e -= m.mass[i] * float(m.gravity @ (p[i] + rc))
    return e
