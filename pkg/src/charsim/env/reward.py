"""Imitation reward: pose, velocity, CoM, and angular-momentum terms."""

from dataclasses import dataclass, field

import numpy as np

from charsim.character.model import CharacterModel, ReferencePose
from charsim.rotation import quat_to_mat_batch

from .observe import _state_features

REWARD_WEIGHTS = (0.55, 0.15, 0.20, 0.10)
# k_p, k_v, k_c, k_L
REWARD_SCALES = (2.0, 0.1, 10.0, 5.0)
# keeps every term inside (0,1] even when exp(-x) underflows
TERM_FLOOR = 1e-12


@dataclass
class RewardBreakdown:
    pose_term: float
    velocity_term: float
    com_term: float
    angmom_term: float
    weights: np.ndarray = field(default_factory=lambda: np.array(REWARD_WEIGHTS))

    @property
    def total(self) -> float:
        terms = (self.pose_term, self.velocity_term, self.com_term, self.angmom_term)
        return float(np.dot(self.weights, terms))


def effective_weights(weights=None, angmom_enabled: bool = True) -> np.ndarray:
    """4-vector summing to 1; angmom weight redistributed when disabled."""
    w = np.array(REWARD_WEIGHTS if weights is None else weights, dtype=float)
    if w.shape != (4,) or (w < 0.0).any() or w.sum() <= 0.0:
        raise ValueError(f"weights must be 4 nonnegative values, got {w}")
    w = w / w.sum()
    if not angmom_enabled:
        w = np.array([w[0], w[1], w[2], 0.0]) / (w[0] + w[1] + w[2])
    return w


def reward_from_features(model: CharacterModel, features, reference: ReferencePose,
                         weights=None, scales=None, angmom_enabled: bool = True
                         ) -> RewardBreakdown:
    R, p, omega, vel, com, comv, L = features
    k_p, k_v, k_c, k_L = REWARD_SCALES if scales is None else scales
    tracked = model.tracked_links

    # tr(R_sim^T R_ref) without forming the relative rotations
    R_ref = quat_to_mat_batch(reference.link_orientations[tracked])
    c = 0.5 * (np.einsum("nij,nij->n", R[tracked], R_ref) - 1.0)
    pose_err = float(np.sum(np.arccos(np.clip(c, -1.0, 1.0)) ** 2))

    dv = reference.link_ang_vel[tracked] - omega[tracked]
    vel_err = float(np.sum(dv * dv))
    dc = reference.com_position - com
    com_err = float(dc @ dc)
    dL = (reference.angular_momentum - L) / model.arrays.total_mass
    ang_err = float(dL @ dL)

    return RewardBreakdown(
        pose_term=max(float(np.exp(-k_p * pose_err)), TERM_FLOOR),
        velocity_term=max(float(np.exp(-k_v * vel_err)), TERM_FLOOR),
        com_term=max(float(np.exp(-k_c * com_err)), TERM_FLOOR),
        angmom_term=max(float(np.exp(-k_L * ang_err)), TERM_FLOOR),
        weights=effective_weights(weights, angmom_enabled),
    )


def compute_reward(model: CharacterModel, sim_state, reference: ReferencePose,
                   weights=None, scales=None, angmom_enabled: bool = True
                   ) -> RewardBreakdown:
    features = _state_features(model, sim_state)
    return reward_from_features(model, features, reference, weights, scales, angmom_enabled)
