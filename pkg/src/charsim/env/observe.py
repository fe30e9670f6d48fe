"""Observation layout and construction for the two tasks.

Every spatial feature is expressed in the simulated character's
root-heading frame, and positions are taken relative to the simulated root
or as reference-minus-simulated differences, so the observation is
invariant to a rigid world translation and to a common yaw of both
characters.
"""

from dataclasses import dataclass

import numpy as np

from charsim.character.model import CharacterModel, ReferencePose
from charsim.dynamics.kernels import com_and_momentum
from charsim.dynamics.engine import link_kinematics
from charsim.dynamics.types import ArticulationState
from charsim.motion.commands import ControlInput
from charsim.rotation import heading_yaw, quat_to_mat, wrap_angle, yaw_quat

MIMIC = "mimic"
USER_INPUT = "user_input"
TASKS = (MIMIC, USER_INPUT)


class ObservationError(RuntimeError):
    """Internal layout / finiteness violation; indicates a code bug."""


@dataclass(frozen=True)
class ObservationLayout:
    """Ordered (name, length) segments; a pure function of (task, model, flags)."""

    task: str
    segments: tuple

    @property
    def total(self) -> int:
        return sum(n for _, n in self.segments)

    def slices(self):
        out = {}
        off = 0
        for name, n in self.segments:
            out[name] = slice(off, off + n)
            off += n
        return out

    def describe(self) -> str:
        lines = [f"task: {self.task}   total: {self.total}"]
        off = 0
        for name, n in self.segments:
            lines.append(f"  [{off:4d}:{off + n:4d}]  {name} ({n})")
            off += n
        return "\n".join(lines)


def observation_layout(task: str, model: CharacterModel,
                       include_angmom: bool = True) -> ObservationLayout:
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    d = model.arrays.nd
    t = len(model.tracked_links)
    sim = [
        ("joint_positions", d),
        ("joint_velocities", d),
        ("link_rotations", 6 * t),
        ("link_ang_vel", 3 * t),
        ("com_position", 3),
        ("com_velocity", 3),
    ]
    if include_angmom:
        sim.append(("angular_momentum", 3))
    if task == MIMIC:
        segs = [("phase", 1)] + sim
    else:
        segs = sim + [("diff_" + name, n) for name, n in sim] + [("control_input", 2)]
    return ObservationLayout(task=task, segments=tuple(segs))


def _state_features(model: CharacterModel, state: ArticulationState):
    """Link kinematics plus CoM / momentum, computed once per step."""
    R, p, omega, vel = link_kinematics(model, state)
    a = model.arrays
    com, comv, L = com_and_momentum(a.mass, a.com, a.inertia_com, R, p, omega, vel)
    return R, p, omega, vel, com, comv, L


def _two_columns(M):
    return np.concatenate([M[:, 0], M[:, 1]])


def build_observation(task: str, model: CharacterModel, sim_state: ArticulationState,
                      reference: ReferencePose = None, phase: float = 0.0,
                      control: ControlInput = None, include_angmom: bool = True,
                      layout: ObservationLayout = None, features=None) -> np.ndarray:
    """Flat observation vector matching observation_layout exactly.

    `features` lets the environment pass kinematics it already computed for
    the reward; callers outside the env loop can leave it None.
    """
    if layout is None:
        layout = observation_layout(task, model, include_angmom)
    if features is None:
        features = _state_features(model, sim_state)
    R, p, omega, vel, com, comv, L = features
    a = model.arrays
    tracked = model.tracked_links

    h = heading_yaw(sim_state.root_orientation)
    Mh = quat_to_mat(yaw_quat(-h))

    parts = {
        "joint_positions": sim_state.joint_q,
        "joint_velocities": sim_state.joint_qd,
        "link_rotations": np.concatenate([_two_columns(Mh @ R[t]) for t in tracked]),
        "link_ang_vel": (omega[tracked] @ Mh.T).ravel(),
        "com_position": Mh @ (com - sim_state.root_position),
        "com_velocity": Mh @ comv,
    }
    if include_angmom:
        parts["angular_momentum"] = Mh @ L / a.total_mass

    if task == MIMIC:
        parts["phase"] = np.array([phase])
    else:
        if reference is None or control is None:
            raise ValueError("user_input observations need a reference and a control input")
        ref_R = [quat_to_mat(reference.link_orientations[t]) for t in tracked]
        parts["diff_joint_positions"] = reference.joint_rotations - sim_state.joint_q
        parts["diff_joint_velocities"] = reference.joint_velocities - sim_state.joint_qd
        parts["diff_link_rotations"] = np.concatenate(
            [_two_columns(Mh @ ref_R[i]) - _two_columns(Mh @ R[t])
             for i, t in enumerate(tracked)])
        parts["diff_link_ang_vel"] = (
            (reference.link_ang_vel[tracked] - omega[tracked]) @ Mh.T).ravel()
        parts["diff_com_position"] = Mh @ (reference.com_position - com)
        parts["diff_com_velocity"] = Mh @ (reference.com_velocity - comv)
        if include_angmom:
            parts["diff_angular_momentum"] = Mh @ (reference.angular_momentum - L) / a.total_mass
        parts["control_input"] = np.array(
            [wrap_angle(control.direction - h), control.power])

    out = np.empty(layout.total)
    off = 0
    for name, n in layout.segments:
        seg = np.asarray(parts[name], dtype=float).ravel()
        if seg.shape[0] != n:
            raise ObservationError(
                f"segment {name}: wrote {seg.shape[0]} values, layout says {n}")
        out[off:off + n] = seg
        off += n
    if off != layout.total:
        raise ObservationError(f"wrote {off} values, layout total is {layout.total}")
    if not np.isfinite(out).all():
        raise ObservationError("observation contains non-finite values")
    return out
