"""Clip sampling: interpolation, finite-difference velocities, full poses."""

import numpy as np

from charsim.character import reference_pose
from charsim.character.model import CharacterModel, ReferencePose
from charsim.dynamics.arrays import JTYPE_SPHERICAL
from charsim.rotation import quat_conj, quat_from_rotvec, quat_mul, quat_slerp, rotvec_from_quat

from .clip import VELOCITY_DELTA_PHASE, ClipError, MotionClip


def _interp(clip: MotionClip, phase: float):
    """Piecewise-linear (slerp for the root quaternion) sample at phase in [0,1]."""
    t = phase * clip.duration
    k = int(np.searchsorted(clip.times, t, side="right")) - 1
    k = min(max(k, 0), clip.times.shape[0] - 2)
    t0, t1 = clip.times[k], clip.times[k + 1]
    a = (t - t0) / (t1 - t0)
    a = min(max(a, 0.0), 1.0)
    pos = (1.0 - a) * clip.root_pos[k] + a * clip.root_pos[k + 1]
    quat = quat_slerp(clip.root_quat[k], clip.root_quat[k + 1], a)
    q = (1.0 - a) * clip.joints[k] + a * clip.joints[k + 1]
    return pos, quat, q


def _frame(clip: MotionClip, phase: float):
    """Sample at an unwrapped phase (may lie outside [0,1) for looping clips).

    Looping clips add whole-cycle root offsets so root position is continuous
    across the wrap; non-looping clips clamp.
    """
    if clip.looping:
        cycles = np.floor(phase)
        pos, quat, q = _interp(clip, phase - cycles)
        return pos + cycles * clip.cycle_offset, quat, q
    return _interp(clip, min(max(phase, 0.0), 1.0))


def clip_velocities(clip: MotionClip, model: CharacterModel, phase: float):
    """Central-difference velocities at phase over +-VELOCITY_DELTA_PHASE.

    Root angular velocity is the world-frame log difference of the bracketing
    orientations; spherical joint rates are local-frame log differences, the
    convention the simulator integrates.
    """
    d = VELOCITY_DELTA_PHASE
    if clip.looping:
        pp, pm = phase + d, phase - d
    else:
        pp, pm = min(phase + d, 1.0), max(phase - d, 0.0)
    denom = (pp - pm) * clip.duration
    pos_p, quat_p, q_p = _frame(clip, pp)
    pos_m, quat_m, q_m = _frame(clip, pm)

    lin = (pos_p - pos_m) / denom
    ang = rotvec_from_quat(quat_mul(quat_p, quat_conj(quat_m))) / denom
    qd = (q_p - q_m) / denom
    a = model.arrays
    for j, sl in a.dof_slices():
        if a.jtype[j] == JTYPE_SPHERICAL:
            rel = quat_mul(quat_conj(quat_from_rotvec(q_m[sl])), quat_from_rotvec(q_p[sl]))
            qd[sl] = rotvec_from_quat(rel) / denom
    return lin, ang, qd


class ClipSampler:
    """Binds a clip to a character model and produces full reference poses."""

    def __init__(self, model: CharacterModel, clip: MotionClip):
        if clip.dof_count != model.dof:
            raise ClipError(
                f"clip {clip.name} has {clip.dof_count} DOF, model {model.name} has {model.dof}")
        self.model = model
        self.clip = clip

    def sample(self, phase: float, cycles: float = 0.0, origin=None) -> ReferencePose:
        """Pose at phase, shifted by completed cycles and a world origin offset."""
        pos, quat, q = _interp(self.clip, phase)
        lin, ang, qd = clip_velocities(self.clip, self.model, phase)
        root = pos + cycles * self.clip.cycle_offset
        if origin is not None:
            root = root + np.asarray(origin, dtype=float)
        return reference_pose(self.model, root, quat, q, qd, lin, ang)


def sample_clip(model: CharacterModel, clip: MotionClip, phase: float) -> ReferencePose:
    return ClipSampler(model, clip).sample(phase)
