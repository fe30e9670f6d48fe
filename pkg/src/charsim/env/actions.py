"""Action-to-drive mapping for the four stiffness/damping control modes."""

from enum import Enum

import numpy as np

from charsim.character.model import CharacterModel

# delta channels move the gains by scale * channel around the model's base
STIFFNESS_DELTA_SCALE = 30.0
DAMPING_DELTA_SCALE = 100.0


class ActionMode(Enum):
    TARGETS_ONLY = "targets_only"
    TARGETS_PLUS_STIFFNESS_DELTA = "targets_plus_stiffness_delta"
    TARGETS_PLUS_DAMPING_DELTA = "targets_plus_damping_delta"
    TARGETS_PLUS_BOTH_DELTAS = "targets_plus_both_deltas"
    TARGETS_TIMES_MULTIPLIERS = "targets_times_multipliers"


# extra per-actuated-joint channels appended after the D target channels
_EXTRA_BLOCKS = {
    ActionMode.TARGETS_ONLY: 0,
    ActionMode.TARGETS_PLUS_STIFFNESS_DELTA: 1,
    ActionMode.TARGETS_PLUS_DAMPING_DELTA: 1,
    ActionMode.TARGETS_PLUS_BOTH_DELTAS: 2,
    ActionMode.TARGETS_TIMES_MULTIPLIERS: 1,
}


def action_dim(model: CharacterModel, mode: ActionMode) -> int:
    return len(model.actuated_dof_indices) + _EXTRA_BLOCKS[mode] * len(model.actuated_joints)


def base_joint_gains(model: CharacterModel):
    """Per-joint (stiffness, damping) straight from the model."""
    a = model.arrays
    kp = np.array([a.kp[a.dof_off[j]] for j in range(a.nj)])
    kd = np.array([a.kd[a.dof_off[j]] for j in range(a.nj)])
    return kp, kd


def apply_action(action, mode: ActionMode, model: CharacterModel):
    """Map a policy action in [-1,1]^A to (targets, stiffness, damping).

    Targets are per-DOF radians (passive DOFs stay at rest); gains are
    per-joint. Delta modes add scale*channel to the base gain, the
    multiplier mode scales both gains by (1 + channel); both clamp at zero.
    """
    action = np.asarray(action, dtype=float)
    expected = action_dim(model, mode)
    if action.shape != (expected,):
        raise ValueError(
            f"mode {mode.value} on {model.name} needs {expected} action "
            f"channels, got {action.shape}")
    action = np.clip(action, -1.0, 1.0)

    a = model.arrays
    dofs = model.actuated_dof_indices
    nda = len(dofs)
    targets = np.zeros(a.nd)
    mid = 0.5 * (a.limit_lo[dofs] + a.limit_hi[dofs])
    half = 0.5 * (a.limit_hi[dofs] - a.limit_lo[dofs])
    targets[dofs] = mid + action[:nda] * half

    stiffness, damping = base_joint_gains(model)
    extras = action[nda:]
    joints = model.actuated_joints
    if mode is ActionMode.TARGETS_PLUS_STIFFNESS_DELTA:
        stiffness[joints] += STIFFNESS_DELTA_SCALE * extras
    elif mode is ActionMode.TARGETS_PLUS_DAMPING_DELTA:
        damping[joints] += DAMPING_DELTA_SCALE * extras
    elif mode is ActionMode.TARGETS_PLUS_BOTH_DELTAS:
        nj = len(joints)
        stiffness[joints] += STIFFNESS_DELTA_SCALE * extras[:nj]
        damping[joints] += DAMPING_DELTA_SCALE * extras[nj:]
    elif mode is ActionMode.TARGETS_TIMES_MULTIPLIERS:
        stiffness[joints] *= 1.0 + extras
        damping[joints] *= 1.0 + extras
    np.maximum(stiffness, 0.0, out=stiffness)
    np.maximum(damping, 0.0, out=damping)
    return targets, stiffness, damping


def expand_joint_gains(model: CharacterModel, stiffness, damping):
    """Per-joint gains to the per-DOF arrays the dynamics step takes."""
    a = model.arrays
    kp = np.empty(a.nd)
    kd = np.empty(a.nd)
    for j, sl in a.dof_slices():
        kp[sl] = stiffness[j]
        kd[sl] = damping[j]
    return kp, kd
