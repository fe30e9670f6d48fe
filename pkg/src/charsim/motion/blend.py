"""Idle/run power blending and heading integration for the user-input task."""

import numpy as np

from charsim.character import reference_pose
from charsim.character.model import CharacterModel, ReferencePose
from charsim.dynamics.arrays import JTYPE_SPHERICAL
from charsim.rotation import (
    quat_from_rotvec,
    quat_mul,
    quat_rotate,
    quat_slerp,
    rotvec_from_quat,
    wrap_angle,
    yaw_quat,
)

from .clip import ClipError, MotionClip
from .commands import ControlInput
from .sampling import _interp, clip_velocities

# the reference heading may not turn faster than this (rad/s)
HEADING_RATE_LIMIT = 2.0 * np.pi


def _check_pair(model: CharacterModel, idle: MotionClip, run: MotionClip):
    if idle.dof_count != run.dof_count or idle.dof_count != model.dof:
        raise ClipError(
            f"blend needs matching DOF counts, got idle {idle.dof_count} / "
            f"run {run.dof_count} / model {model.dof}")


def _blend_frame(model: CharacterModel, idle: MotionClip, run: MotionClip,
                 phase: float, power: float):
    """Clip-space blend of the two samples by weight = power."""
    w = min(max(power, 0.0), 1.0)
    pos_i, quat_i, q_i = _interp(idle, phase)
    pos_r, quat_r, q_r = _interp(run, phase)
    li, ai, qdi = clip_velocities(idle, model, phase)
    lr, ar, qdr = clip_velocities(run, model, phase)
    pos = (1.0 - w) * pos_i + w * pos_r
    quat = quat_slerp(quat_i, quat_r, w)
    q = (1.0 - w) * q_i + w * q_r
    qd = (1.0 - w) * qdi + w * qdr
    lin = (1.0 - w) * li + w * lr
    ang = (1.0 - w) * ai + w * ar
    # per-DOF lerp is fine for hinges; blend spherical joints on the geodesic
    a = model.arrays
    if 0.0 < w < 1.0:
        for j, sl in a.dof_slices():
            if a.jtype[j] == JTYPE_SPHERICAL:
                q[sl] = rotvec_from_quat(quat_slerp(
                    quat_from_rotvec(q_i[sl]), quat_from_rotvec(q_r[sl]), w))
    return pos, quat, q, qd, lin, ang


def blend_controller(model: CharacterModel, idle: MotionClip, run: MotionClip,
                     control: ControlInput, heading_state: float, phase: float) -> ReferencePose:
    """One-shot blended reference pose at the given heading and phase.

    The clips are authored heading-forward (+x); the blended sample is yawed
    by heading_state. Heading integration from control.direction lives in
    BlendController.step, which rate-limits it and keeps the travel anchor.
    """
    _check_pair(model, idle, run)
    pos, quat, q, qd, lin, ang = _blend_frame(model, idle, run, phase, control.power)
    yaw = yaw_quat(heading_state)
    return reference_pose(
        model, quat_rotate(yaw, pos), quat_mul(yaw, quat), q, qd,
        quat_rotate(yaw, lin), quat_rotate(yaw, ang),
    )


class BlendController:
    """Stateful animator stand-in: phase, heading, and a travel anchor.

    Horizontal travel integrates the blended root velocity into the anchor
    (so looping-clip wraps never jump), vertical root motion follows the
    clips. Planar characters snap the commanded heading to {0, pi}; for the
    +-45 degree command range that pins heading to 0.
    """

    def __init__(self, model: CharacterModel, idle: MotionClip, run: MotionClip):
        _check_pair(model, idle, run)
        if abs(idle.duration - run.duration) > 1e-9:
            raise ClipError("blend clips must share a duration so one phase drives both")
        if not (idle.looping and run.looping):
            raise ClipError("blend clips must loop")
        self.model = model
        self.idle = idle
        self.run = run
        self.reset()

    def reset(self, heading: float = 0.0, phase: float = 0.0, anchor=(0.0, 0.0, 0.0)):
        self.heading = float(heading)
        self.phase = float(phase)
        self.anchor = np.asarray(anchor, dtype=float).copy()
        self.anchor[1] = 0.0

    def step(self, control: ControlInput, dt: float) -> ReferencePose:
        # direction is the commanded world heading; the limit makes the turn gradual
        target = control.direction
        if self.model.planar:
            target = 0.0 if abs(wrap_angle(target)) <= np.pi / 2.0 else np.pi
        err = wrap_angle(target - self.heading)
        rate = 0.0 if dt <= 0.0 else min(max(err / dt, -HEADING_RATE_LIMIT), HEADING_RATE_LIMIT)
        self.heading = wrap_angle(self.heading + rate * dt)

        self.phase = (self.phase + dt / self.idle.duration) % 1.0
        pos, quat, q, qd, lin, ang = _blend_frame(
            self.model, self.idle, self.run, self.phase, control.power)
        yaw = yaw_quat(self.heading)
        v_world = quat_rotate(yaw, lin)
        travel = v_world.copy()
        travel[1] = 0.0
        self.anchor += travel * dt
        root = self.anchor + np.array([0.0, pos[1], 0.0])
        w_world = quat_rotate(yaw, ang)
        w_world[1] += rate
        return reference_pose(
            self.model, root, quat_mul(yaw, quat), q, qd, v_world, w_world)
