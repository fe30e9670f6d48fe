"""Actor-critic networks, PPO, GAE, checkpoints, and the trainer loop."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .distributions import (
    gaussian_entropy,
    gaussian_logprob,
    sample_and_logprob,
    sample_pre_squash,
    squash_correction,
    squashed_logprob,
)
from .gae import TrajectoryBuffer, compute_gae
from .nets import (
    LOG_STD_INIT,
    LOG_STD_MAX,
    LOG_STD_MIN,
    PolicyParams,
    init_params,
    mlp_backward,
    mlp_forward,
    mlp_init,
    policy_forward,
)
from .normalizer import RunningNormalizer
from .ppo import (
    Adam,
    NonFiniteLossError,
    PPOConfig,
    clip_grads_,
    global_grad_norm,
    ppo_loss_and_grads,
    ppo_update,
)
from .trainer import METRICS_COLUMNS, Trainer, layout_signature

__all__ = [
    "Adam",
    "CheckpointError",
    "LOG_STD_INIT",
    "LOG_STD_MAX",
    "LOG_STD_MIN",
    "METRICS_COLUMNS",
    "NonFiniteLossError",
    "PPOConfig",
    "PolicyParams",
    "RunningNormalizer",
    "Trainer",
    "TrajectoryBuffer",
    "clip_grads_",
    "compute_gae",
    "gaussian_entropy",
    "gaussian_logprob",
    "global_grad_norm",
    "init_params",
    "layout_signature",
    "load_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "mlp_init",
    "policy_forward",
    "ppo_loss_and_grads",
    "ppo_update",
    "sample_and_logprob",
    "sample_pre_squash",
    "save_checkpoint",
    "squash_correction",
    "squashed_logprob",
]
