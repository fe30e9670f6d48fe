"""Flattening of an articulation tree into plain ndarrays for the jitted kernels.

Conventions used everywhere downstream:
  * links are in topological order, link 0 is the floating root, and joint j
    connects parent[j+1] -> link j+1 (one inboard joint per non-root link);
  * each link has a "geometry frame" in which its com, child joint anchors and
    contact spheres are authored; the kernel frame F of a non-root link is the
    geometry frame translated to put the origin at the inboard joint anchor,
    for the root both frames coincide;
  * spatial vectors are angular-first Plucker coordinates at the F origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import (
    HINGE,
    SPHERICAL,
    ContactModel,
    JointModel,
    ModelValidationError,
    SpatialInertia,
    GRAVITY,
)

JTYPE_HINGE = 0
JTYPE_SPHERICAL = 1


def _skew(v):
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def spatial_inertia_matrix(mass: float, com: np.ndarray, inertia_com: np.ndarray) -> np.ndarray:
    """6x6 spatial inertia about the frame origin, angular block first."""
    c = _skew(com)
    out = np.zeros((6, 6))
    out[:3, :3] = inertia_com + mass * (c @ c.T)
    out[:3, 3:] = mass * c
    out[3:, :3] = mass * c.T
    out[3:, 3:] = mass * np.eye(3)
    return out


@dataclass
class ModelArrays:
    """Numba-friendly view of one character; all arrays are float64/int32."""

    nl: int
    nj: int
    nd: int
    parent: np.ndarray          # (nl,) int32, parent[0] == -1
    jtype: np.ndarray           # (nj,) int32
    dof_off: np.ndarray         # (nj,) int32 offset into q/qd
    jaxis: np.ndarray           # (nj, 3) hinge axis in child F frame
    anchor_parent: np.ndarray   # (nj, 3) joint anchor in parent F frame
    mass: np.ndarray            # (nl,)
    com: np.ndarray             # (nl, 3) com in F frame
    inertia_com: np.ndarray     # (nl, 3, 3)
    ispatial: np.ndarray        # (nl, 6, 6) spatial inertia at F origin
    kp: np.ndarray              # (nd,)
    kd: np.ndarray              # (nd,)
    tau_max: np.ndarray         # (nd,)
    limit_lo: np.ndarray        # (nd,)
    limit_hi: np.ndarray        # (nd,)
    actuated: np.ndarray        # (nd,) uint8, 1 where the drive applies
    sphere_link: np.ndarray     # (ns,) int32
    sphere_pos: np.ndarray      # (ns, 3) in link F frame
    sphere_radius: np.ndarray   # (ns,)
    planar: bool
    ground_height: float
    contact_kn: float
    contact_kd: float
    friction_mu: float
    gravity: np.ndarray         # (3,)
    total_mass: float
    link_names: list
    joint_names: list

    @property
    def n_spheres(self) -> int:
        return int(self.sphere_link.shape[0])

    def dof_slices(self):
        """(joint index, slice into q/qd) pairs in joint order."""
        out = []
        for j in range(self.nj):
            width = 1 if self.jtype[j] == JTYPE_HINGE else 3
            out.append((j, slice(int(self.dof_off[j]), int(self.dof_off[j]) + width)))
        return out


def build_model_arrays(
    link_names: list,
    inertias: list,
    joints: list,
    spheres: list | None = None,
    planar: bool = False,
    contact: ContactModel | None = None,
    actuated_joints: set | None = None,
    gravity: np.ndarray | None = None,
) -> ModelArrays:
    """Flatten validated links/joints into a ModelArrays.

    `inertias[i]` is the SpatialInertia of link i in its geometry frame,
    `joints[j]` must have child_link == j + 1 and parent_link < child_link.
    `spheres` is a list of (link, pos_geometry, radius). `actuated_joints`
    holds joint names whose PD drive is controller-driven; joints outside it
    still use their gains as passive springs toward zero.
    """
    nl = len(inertias)
    nj = len(joints)
    if nl != nj + 1:
        raise ModelValidationError(f"need one joint per non-root link, got {nl} links / {nj} joints")
    if len(link_names) != nl:
        raise ModelValidationError("link_names length mismatch")

    for i, si in enumerate(inertias):
        si.validate(link_names[i])

    parent = np.full(nl, -1, dtype=np.int32)
    inbound_anchor = np.zeros((nl, 3))  # joint anchor in the child geometry frame
    jtype = np.zeros(nj, dtype=np.int32)
    dof_off = np.zeros(nj, dtype=np.int32)
    jaxis = np.zeros((nj, 3))
    anchor_parent = np.zeros((nj, 3))

    nd = 0
    for j, jm in enumerate(joints):
        jm.validate()
        if jm.child_link != j + 1:
            raise ModelValidationError(
                f"joint {jm.name}: expected child link {j + 1}, got {jm.child_link}"
            )
        if not 0 <= jm.parent_link < jm.child_link:
            raise ModelValidationError(f"joint {jm.name}: parent must precede child in link order")
        parent[j + 1] = jm.parent_link
        inbound_anchor[j + 1] = np.asarray(jm.child_anchor, dtype=float)
        jtype[j] = JTYPE_HINGE if jm.kind == HINGE else JTYPE_SPHERICAL
        if jm.kind == HINGE:
            jaxis[j] = np.asarray(jm.axis, dtype=float)
        dof_off[j] = nd
        nd += jm.dof

    # Shift authored parent-frame anchors into the parent's F frame.
    for j, jm in enumerate(joints):
        p = jm.parent_link
        anchor_parent[j] = np.asarray(jm.parent_anchor, dtype=float) - (
            inbound_anchor[p] if p > 0 else 0.0
        )

    mass = np.zeros(nl)
    com = np.zeros((nl, 3))
    inertia_com = np.zeros((nl, 3, 3))
    ispatial = np.zeros((nl, 6, 6))
    for i, si in enumerate(inertias):
        mass[i] = si.mass
        shift = inbound_anchor[i] if i > 0 else np.zeros(3)
        com[i] = np.asarray(si.com_offset, dtype=float) - shift
        inertia_com[i] = np.asarray(si.rot_inertia, dtype=float)
        ispatial[i] = spatial_inertia_matrix(mass[i], com[i], inertia_com[i])

    kp = np.zeros(nd)
    kd = np.zeros(nd)
    tau_max = np.zeros(nd)
    limit_lo = np.zeros(nd)
    limit_hi = np.zeros(nd)
    actuated = np.zeros(nd, dtype=np.uint8)
    for j, jm in enumerate(joints):
        sl = slice(int(dof_off[j]), int(dof_off[j]) + jm.dof)
        kp[sl] = jm.stiffness
        kd[sl] = jm.damping
        tau_max[sl] = jm.max_torque
        lim = np.asarray(jm.limits, dtype=float)
        limit_lo[sl] = lim[:, 0]
        limit_hi[sl] = lim[:, 1]
        if actuated_joints is None or jm.name in actuated_joints:
            actuated[sl] = 1

    spheres = spheres or []
    ns = len(spheres)
    sphere_link = np.zeros(ns, dtype=np.int32)
    sphere_pos = np.zeros((ns, 3))
    sphere_radius = np.zeros(ns)
    for k, (link, pos, radius) in enumerate(spheres):
        if not 0 <= link < nl:
            raise ModelValidationError(f"contact sphere {k}: bad link index {link}")
        if radius <= 0.0:
            raise ModelValidationError(f"contact sphere {k}: radius must be > 0")
        sphere_link[k] = link
        shift = inbound_anchor[link] if link > 0 else np.zeros(3)
        sphere_pos[k] = np.asarray(pos, dtype=float) - shift
        sphere_radius[k] = radius

    contact = contact or ContactModel()
    contact.validate()

    return ModelArrays(
        nl=nl,
        nj=nj,
        nd=nd,
        parent=parent,
        jtype=jtype,
        dof_off=dof_off,
        jaxis=jaxis,
        anchor_parent=anchor_parent,
        mass=mass,
        com=com,
        inertia_com=inertia_com,
        ispatial=ispatial,
        kp=kp,
        kd=kd,
        tau_max=tau_max,
        limit_lo=limit_lo,
        limit_hi=limit_hi,
        actuated=actuated,
        sphere_link=sphere_link,
        sphere_pos=sphere_pos,
        sphere_radius=sphere_radius,
        planar=planar,
        ground_height=contact.ground_height,
        contact_kn=contact.normal_stiffness,
        contact_kd=contact.normal_damping,
        friction_mu=contact.friction_coeff,
        gravity=(GRAVITY if gravity is None else np.asarray(gravity, dtype=float)).copy(),
        total_mass=float(np.sum(mass)),
        link_names=list(link_names),
        joint_names=[jm.name for jm in joints],
    )
