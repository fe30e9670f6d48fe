"""RL tasks: observations, action modes, reward, termination, stepping."""

from .actions import (
    ActionMode,
    DAMPING_DELTA_SCALE,
    STIFFNESS_DELTA_SCALE,
    action_dim,
    apply_action,
    base_joint_gains,
    expand_joint_gains,
)
from .env import CharEnv, VecEnv, env_step, reset_episode
from .episode import (
    DEFAULT_EARLY_STOP,
    EpisodeConfig,
    FALL_FRACTION,
    StepVerdict,
    check_termination,
)
from .observe import (
    MIMIC,
    USER_INPUT,
    ObservationError,
    ObservationLayout,
    build_observation,
    observation_layout,
)
from .reward import (
    REWARD_SCALES,
    REWARD_WEIGHTS,
    RewardBreakdown,
    compute_reward,
    effective_weights,
)

__all__ = [
    "ActionMode",
    "CharEnv",
    "DAMPING_DELTA_SCALE",
    "DEFAULT_EARLY_STOP",
    "EpisodeConfig",
    "FALL_FRACTION",
    "MIMIC",
    "ObservationError",
    "ObservationLayout",
    "REWARD_SCALES",
    "REWARD_WEIGHTS",
    "RewardBreakdown",
    "STIFFNESS_DELTA_SCALE",
    "StepVerdict",
    "USER_INPUT",
    "VecEnv",
    "action_dim",
    "apply_action",
    "base_joint_gains",
    "build_observation",
    "check_termination",
    "compute_reward",
    "effective_weights",
    "env_step",
    "expand_joint_gains",
    "observation_layout",
    "reset_episode",
]
