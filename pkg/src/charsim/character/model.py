"""Character model assembly: authored link/joint specs to a validated model."""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from charsim.dynamics import (
    ContactModel,
    JointModel,
    ModelValidationError,
    SpatialInertia,
    build_model_arrays,
)
from charsim.dynamics.arrays import ModelArrays


@dataclass(frozen=True)
class RenderCapsule:
    p0: np.ndarray
    p1: np.ndarray
    radius: float


@dataclass(frozen=True)
class LinkSpec:
    name: str
    inertia: SpatialInertia
    contact_spheres: list = field(default_factory=list)  # (pos, radius) pairs
    render_capsule: RenderCapsule | None = None


@dataclass(frozen=True)
class JointSpec:
    """Authoring-side joint: parent/child by link name, pre-canonical order."""

    name: str
    kind: str
    parent: str
    child: str
    parent_anchor: np.ndarray
    child_anchor: np.ndarray
    limits: np.ndarray
    stiffness: float = 0.0
    damping: float = 0.0
    max_torque: float = 100.0
    axis: np.ndarray | None = None
    actuated: bool = False


@dataclass(frozen=True)
class CharacterModel:
    """Immutable articulated character in canonical order (joint j drives link j+1)."""

    name: str
    links: list  # LinkSpec, canonical order, links[0] is the root
    joints: list  # JointModel with canonical link indices
    root_link: int
    tracked_links: list  # link indices used for reward/observation
    actuated_joints: list  # joint indices with controller-driven PD drives
    planar: bool
    contact: ContactModel
    arrays: ModelArrays

    @property
    def dof(self) -> int:
        return int(self.arrays.nd)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def actuated_dof_indices(self) -> np.ndarray:
        """Flat DOF indices belonging to actuated joints, ascending."""
        out = []
        for j in self.actuated_joints:
            off = int(self.arrays.dof_off[j])
            out.extend(range(off, off + self.joints[j].dof))
        return np.array(out, dtype=np.int64)

    def link_index(self, name: str) -> int:
        for i, ln in enumerate(self.links):
            if ln.name == name:
                return i
        raise KeyError(name)

    def joint_index(self, name: str) -> int:
        for j, jm in enumerate(self.joints):
            if jm.name == name:
                return j
        raise KeyError(name)


@dataclass
class ReferencePose:
    """Kinematic character state at one instant, with derived FK quantities."""

    root_position: np.ndarray
    root_orientation: np.ndarray
    joint_rotations: np.ndarray  # per-DOF
    joint_velocities: np.ndarray  # per-DOF
    root_lin_vel: np.ndarray
    root_ang_vel: np.ndarray
    link_positions: np.ndarray  # (nl, 3) world
    link_orientations: np.ndarray  # (nl, 4) world
    link_lin_vel: np.ndarray  # (nl, 3) world, at the link frame origin
    link_ang_vel: np.ndarray  # (nl, 3) world
    com_position: np.ndarray
    com_velocity: np.ndarray
    angular_momentum: np.ndarray  # about the CoM

    @property
    def link_poses(self):
        return list(zip(self.link_positions, self.link_orientations))

    def copy(self) -> "ReferencePose":
        return ReferencePose(
            *(np.array(getattr(self, f)) for f in (
                "root_position", "root_orientation", "joint_rotations",
                "joint_velocities", "root_lin_vel", "root_ang_vel",
                "link_positions", "link_orientations", "link_lin_vel",
                "link_ang_vel", "com_position", "com_velocity",
                "angular_momentum",
            ))
        )


def with_actuated_gains(model: CharacterModel, stiffness: float,
                        damping: float) -> CharacterModel:
    """A copy of the model with every actuated joint's PD gains replaced.

    Run configs use this to start gain-learning benchmarks from a fixed
    uniform initialization without forking the character file. Passive
    joints keep their authored spring values.
    """
    if stiffness < 0.0 or damping < 0.0:
        raise ModelValidationError("initial gains must be >= 0")
    joints = list(model.joints)
    for j in model.actuated_joints:
        joints[j] = dataclasses.replace(
            joints[j], stiffness=float(stiffness), damping=float(damping))
    spheres = [(i, pos, radius) for i, ln in enumerate(model.links)
               for pos, radius in ln.contact_spheres]
    arrays = build_model_arrays(
        link_names=[ln.name for ln in model.links],
        inertias=[ln.inertia for ln in model.links],
        joints=joints,
        spheres=spheres,
        planar=model.planar,
        contact=model.contact,
        actuated_joints={joints[j].name for j in model.actuated_joints},
    )
    return dataclasses.replace(model, joints=joints, arrays=arrays)


def _canonical_order(link_names, joints, root: str):
    """BFS link/joint order from the root; detects cycles and extra roots."""
    by_parent = {}
    child_seen = {}
    for jn, js in enumerate(joints):
        if js.child in child_seen:
            raise ModelValidationError(f"link {js.child} is the child of multiple joints")
        child_seen[js.child] = jn
        by_parent.setdefault(js.parent, []).append(jn)

    visited = {root}
    link_order = [root]
    joint_order = []
    queue = [root]
    while queue:
        p = queue.pop(0)
        for jn in by_parent.get(p, []):
            c = joints[jn].child
            if c in visited:
                raise ModelValidationError("cycle detected")
            visited.add(c)
            link_order.append(c)
            joint_order.append(jn)
            queue.append(c)

    if len(visited) != len(link_names):
        missing = [n for n in link_names if n not in visited]
        if any(n not in child_seen for n in missing):
            loose = next(n for n in missing if n not in child_seen)
            raise ModelValidationError(f"multiple roots: link {loose} is not connected")
        raise ModelValidationError("cycle detected")
    return link_order, joint_order


def make_model(
    name: str,
    links: list,
    joints: list,
    root: str,
    tracked_links: list,
    planar: bool = False,
    contact: ContactModel | None = None,
) -> CharacterModel:
    """Validate LinkSpec/JointSpec lists and assemble a CharacterModel.

    Joints reference links by name and carry their own `actuated` flag; link
    and joint order in the input is free, the model stores canonical order.
    """
    link_names = [ln.name for ln in links]
    if len(set(link_names)) != len(link_names):
        dup = next(n for n in link_names if link_names.count(n) > 1)
        raise ModelValidationError(f"duplicate link name {dup}")
    joint_names = [js.name for js in joints]
    if len(set(joint_names)) != len(joint_names):
        dup = next(n for n in joint_names if joint_names.count(n) > 1)
        raise ModelValidationError(f"duplicate joint name {dup}")
    if root not in link_names:
        raise ModelValidationError(f"root link {root} is not defined")
    by_name = {ln.name: ln for ln in links}
    for js in joints:
        for end, label in ((js.parent, "parent"), (js.child, "child")):
            if end not in by_name:
                raise ModelValidationError(f"joint {js.name}: unknown {label} link {end}")
        if js.actuated and js.max_torque <= 0.0:
            raise ModelValidationError(f"actuated joint {js.name} needs max_torque > 0")

    link_order, joint_order = _canonical_order(link_names, joints, root)
    links_c = [by_name[n] for n in link_order]
    index_of = {n: i for i, n in enumerate(link_order)}

    joints_c = []
    for jn in joint_order:
        js = joints[jn]
        joints_c.append(JointModel(
            name=js.name,
            kind=js.kind,
            parent_link=index_of[js.parent],
            child_link=index_of[js.child],
            parent_anchor=np.asarray(js.parent_anchor, dtype=float),
            child_anchor=np.asarray(js.child_anchor, dtype=float),
            limits=np.asarray(js.limits, dtype=float),
            stiffness=float(js.stiffness),
            damping=float(js.damping),
            max_torque=float(js.max_torque),
            axis=None if js.axis is None else np.asarray(js.axis, dtype=float),
        ))

    if not tracked_links:
        raise ModelValidationError("tracked_links must be non-empty")
    tracked_idx = []
    for n in tracked_links:
        if n not in index_of:
            raise ModelValidationError(f"tracked link {n} is not defined")
        tracked_idx.append(index_of[n])
    tracked_idx = sorted(set(tracked_idx))

    actuated_names = {joints[jn].name for jn in joint_order if joints[jn].actuated}
    actuated_idx = sorted(j for j, jm in enumerate(joints_c) if jm.name in actuated_names)

    spheres = []
    for i, ln in enumerate(links_c):
        for pos, radius in ln.contact_spheres:
            spheres.append((i, np.asarray(pos, dtype=float), float(radius)))

    contact = contact if contact is not None else ContactModel()
    arrays = build_model_arrays(
        link_names=link_order,
        inertias=[ln.inertia for ln in links_c],
        joints=joints_c,
        spheres=spheres,
        planar=planar,
        contact=contact,
        actuated_joints=actuated_names,
    )
    return CharacterModel(
        name=name,
        links=links_c,
        joints=joints_c,
        root_link=0,
        tracked_links=tracked_idx,
        actuated_joints=actuated_idx,
        planar=planar,
        contact=contact,
        arrays=arrays,
    )
