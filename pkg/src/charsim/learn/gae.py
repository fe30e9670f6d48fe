"""Trajectory storage and generalized advantage estimation."""

from dataclasses import dataclass

import numpy as np


@dataclass
class TrajectoryBuffer:
    """Rollout of shape (horizon, num_envs, ...); pre_squash holds the
    unsquashed Gaussian samples the log-probs were computed from."""

    obs: np.ndarray        # (T, N, O)
    pre_squash: np.ndarray  # (T, N, A)
    log_prob: np.ndarray   # (T, N)
    reward: np.ndarray     # (T, N)
    value: np.ndarray      # (T, N)
    done: np.ndarray       # (T, N) bool

    @classmethod
    def allocate(cls, horizon: int, num_envs: int, obs_dim: int, act_dim: int):
        return cls(
            obs=np.zeros((horizon, num_envs, obs_dim)),
            pre_squash=np.zeros((horizon, num_envs, act_dim)),
            log_prob=np.zeros((horizon, num_envs)),
            reward=np.zeros((horizon, num_envs)),
            value=np.zeros((horizon, num_envs)),
            done=np.zeros((horizon, num_envs), dtype=bool),
        )

    @property
    def horizon(self) -> int:
        return self.obs.shape[0]

    @property
    def num_envs(self) -> int:
        return self.obs.shape[1]


def compute_gae(buffer: TrajectoryBuffer, gamma: float, lam: float,
                bootstrap_values):
    """Raw (unnormalized) advantages and returns by the standard backward
    recursion; done flags cut both the bootstrap and the running sum.
    Advantage normalization happens at update time, not here.
    """
    T, N = buffer.reward.shape
    bootstrap = np.asarray(bootstrap_values, dtype=float).reshape(N)
    adv = np.zeros((T, N))
    carry = np.zeros(N)
    next_value = bootstrap
    for t in range(T - 1, -1, -1):
        alive = 1.0 - buffer.done[t].astype(float)
        delta = buffer.reward[t] + gamma * next_value * alive - buffer.value[t]
        carry = delta + gamma * lam * alive * carry
        adv[t] = carry
        next_value = buffer.value[t]
    return adv, adv + buffer.value
