"""Forward kinematics for the kinematic (reference) character."""

import numpy as np

from charsim.dynamics.arrays import JTYPE_HINGE
from charsim.dynamics.kernels import com_and_momentum, fk_world, link_world_velocities
from charsim.rotation import (
    mat_to_quat,
    quat_conj,
    quat_from_rotvec,
    quat_mul,
    quat_rotate,
    rotvec_from_quat,
)

from .model import CharacterModel, ReferencePose


def forward_kinematics(model: CharacterModel, root_pose, joint_rotations):
    """World pose of every link frame.

    root_pose is (position, orientation quaternion); joint_rotations is the
    per-DOF vector (hinge angle, or exponential-map 3-vector per spherical
    joint). Returns (positions (nl,3), orientations (nl,4)).
    """
    a = model.arrays
    q = np.asarray(joint_rotations, dtype=float)
    if q.shape != (a.nd,):
        raise ValueError(f"joint rotation vector has shape {q.shape}, model has {a.nd} DOF")
    root_pos, root_quat = root_pose
    nl = a.nl
    pos = np.empty((nl, 3))
    quat = np.empty((nl, 4))
    pos[0] = root_pos
    quat[0] = root_quat
    for i in range(1, nl):
        j = i - 1
        off = a.dof_off[j]
        if a.jtype[j] == JTYPE_HINGE:
            rv = q[off] * a.jaxis[j]
        else:
            rv = q[off:off + 3]
        pa = a.parent[i]
        quat[i] = quat_mul(quat[pa], quat_from_rotvec(rv))
        pos[i] = pos[pa] + quat_rotate(quat[pa], a.anchor_parent[j])
    return pos, quat


def standing_root_height(model: CharacterModel, joint_rotations=None) -> float:
    """Root height that rests the lowest contact sphere on the ground.

    Evaluated at the given pose (zero pose by default) with identity root
    orientation; characters without contact spheres get 0.
    """
    a = model.arrays
    if a.n_spheres == 0:
        return 0.0
    q = np.zeros(a.nd) if joint_rotations is None else np.asarray(joint_rotations, dtype=float)
    pos, quat = forward_kinematics(model, (np.zeros(3), np.array([1.0, 0, 0, 0])), q)
    low = np.inf
    for k in range(a.n_spheres):
        i = a.sphere_link[k]
        c = pos[i] + quat_rotate(quat[i], a.sphere_pos[k])
        low = min(low, c[1] - a.sphere_radius[k])
    return float(a.ground_height - low)


def joint_rotations_from_poses(model: CharacterModel, link_orientations) -> np.ndarray:
    """Per-DOF joint rotations recovered from world link orientations.

    Inverse of forward_kinematics for angles within (-pi, pi); hinge joints
    project the relative rotation onto their axis.
    """
    a = model.arrays
    q = np.zeros(a.nd)
    for i in range(1, a.nl):
        j = i - 1
        rel = quat_mul(quat_conj(np.asarray(link_orientations[a.parent[i]], dtype=float)),
                       np.asarray(link_orientations[i], dtype=float))
        rv = rotvec_from_quat(rel)
        off = a.dof_off[j]
        if a.jtype[j] == JTYPE_HINGE:
            q[off] = float(rv @ a.jaxis[j])
        else:
            q[off:off + 3] = rv
    return q


def reference_pose(
    model: CharacterModel,
    root_position,
    root_orientation,
    joint_rotations,
    joint_velocities=None,
    root_lin_vel=None,
    root_ang_vel=None,
) -> ReferencePose:
    """Full kinematic pose with FK, per-link velocities, CoM and momentum."""
    a = model.arrays
    q = np.asarray(joint_rotations, dtype=float)
    qd = np.zeros(a.nd) if joint_velocities is None else np.asarray(joint_velocities, dtype=float)
    rp = np.asarray(root_position, dtype=float)
    rq = np.asarray(root_orientation, dtype=float)
    rv = np.zeros(3) if root_lin_vel is None else np.asarray(root_lin_vel, dtype=float)
    rw = np.zeros(3) if root_ang_vel is None else np.asarray(root_ang_vel, dtype=float)

    R, p = fk_world(a.parent, a.jtype, a.jaxis, a.dof_off, a.anchor_parent, rp, rq, q)
    omega, vel = link_world_velocities(a.parent, a.jtype, a.jaxis, a.dof_off, R, p, rv, rw, qd)
    quats = np.empty((a.nl, 4))
    for i in range(a.nl):
        quats[i] = mat_to_quat(R[i])
    cpos, cvel, angmom = com_and_momentum(a.mass, a.com, a.inertia_com, R, p, omega, vel)
    return ReferencePose(
        root_position=rp.copy(),
        root_orientation=rq.copy(),
        joint_rotations=q.copy(),
        joint_velocities=qd.copy(),
        root_lin_vel=rv.copy(),
        root_ang_vel=rw.copy(),
        link_positions=p,
        link_orientations=quats,
        link_lin_vel=vel,
        link_ang_vel=omega,
        com_position=cpos,
        com_velocity=cvel,
        angular_momentum=angmom,
    )
