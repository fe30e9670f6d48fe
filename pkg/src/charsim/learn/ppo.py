"""Clipped-surrogate PPO with explicit gradients and an adaptive-moment
optimizer, all in numpy."""

from dataclasses import dataclass

import numpy as np

from .distributions import LOG_2PI, gaussian_entropy, squash_correction
from .gae import TrajectoryBuffer, compute_gae
from .nets import LOG_STD_MAX, LOG_STD_MIN, PolicyParams, mlp_backward, mlp_forward


class NonFiniteLossError(RuntimeError):
    """An update produced a non-finite loss; the message names the minibatch."""


@dataclass
class PPOConfig:
    learning_rate: float = 3e-4
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    horizon: int = 512
    num_envs: int = 16
    epochs_per_update: int = 4
    minibatch_size: int = 1024
    entropy_coeff: float = 0.0
    value_coeff: float = 0.5
    max_grad_norm: float = 0.5
    total_steps: int = 2_000_000

    def validate(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError(f"clip_epsilon must be in (0,1), got {self.clip_epsilon}")
        for name in ("gamma", "gae_lambda"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0,1], got {v}")
        for name in ("learning_rate", "horizon", "num_envs", "epochs_per_update",
                     "minibatch_size", "total_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        return self


def _grad_tree(params: PolicyParams):
    return {
        "policy": {k: np.zeros_like(v) for k, v in params.policy.items()},
        "value": {k: np.zeros_like(v) for k, v in params.value.items()},
        "log_std": np.zeros_like(params.log_std),
    }


def _tree_arrays(tree):
    for k in sorted(tree["policy"]):
        yield ("policy", k), tree["policy"][k]
    for k in sorted(tree["value"]):
        yield ("value", k), tree["value"][k]
    yield ("log_std",), tree["log_std"]


def global_grad_norm(grads) -> float:
    total = 0.0
    for _, g in _tree_arrays(grads):
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_grads_(grads, max_norm: float) -> float:
    """Scale the whole gradient tree to the norm budget; returns the pre-clip norm."""
    norm = global_grad_norm(grads)
    if max_norm > 0.0 and norm > max_norm:
        scale = max_norm / (norm + 1e-8)
        for _, g in _tree_arrays(grads):
            g *= scale
    return norm


class Adam:
    """First/second-moment adaptive optimizer with bias correction."""

    def __init__(self, params: PolicyParams, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = _grad_tree(params)
        self.v = _grad_tree(params)

    def step(self, params: PolicyParams, grads, lr: float):
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for key, g in _tree_arrays(grads):
            m = self._slot(self.m, key)
            v = self._slot(self.v, key)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            target = self._slot({"policy": params.policy, "value": params.value,
                                 "log_std": params.log_std}, key)
            target -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    @staticmethod
    def _slot(tree, key):
        node = tree[key[0]]
        return node[key[1]] if len(key) == 2 else node


def ppo_loss_and_grads(params: PolicyParams, batch: dict, config: PPOConfig):
    """Clipped-surrogate loss and its exact gradients for one minibatch.

    batch holds obs, pre_squash, log_prob_old, advantage, and returns; the
    advantage is assumed already normalized. The squash correction depends
    only on the stored samples, so it shifts both log-probs and cancels in
    the ratio while keeping the densities honest.
    """
    x = params.normalizer.apply(batch["obs"])
    B = x.shape[0]
    u = batch["pre_squash"]
    adv = batch["advantage"]
    ret = batch["returns"]

    mean, cache_p = mlp_forward(params.policy, x)
    value, cache_v = mlp_forward(params.value, x)
    value = value[:, 0]

    log_std = params.clipped_log_std()
    sigma = np.exp(log_std)
    z = (u - mean) / sigma
    logp_new = (np.sum(-0.5 * z * z - log_std - 0.5 * LOG_2PI, axis=-1)
                - squash_correction(u))
    ratio = np.exp(logp_new - batch["log_prob_old"])

    un = ratio * adv
    cl = np.clip(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon) * adv
    policy_loss = -float(np.mean(np.minimum(un, cl)))
    value_err = value - ret
    value_loss = float(np.mean(value_err ** 2))
    entropy = gaussian_entropy(log_std)
    total = (policy_loss + config.value_coeff * value_loss
             - config.entropy_coeff * entropy)
    if not np.isfinite(total):
        raise NonFiniteLossError(
            f"non-finite loss (policy {policy_loss}, value {value_loss})")

    # d(-min(un, cl))/dlogp: the unclipped branch moves with ratio; the
    # clipped branch only inside the pass-through band
    in_band = (ratio > 1.0 - config.clip_epsilon) & (ratio < 1.0 + config.clip_epsilon)
    dlogp = -np.where(un <= cl, un, np.where(in_band, un, 0.0)) / B

    dmean = dlogp[:, None] * (z / sigma)
    dlog_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0)
    dlog_std -= config.entropy_coeff  # d(-coeff*entropy)/dlog_std = -coeff
    clamp_open = (params.log_std > LOG_STD_MIN) & (params.log_std < LOG_STD_MAX)
    dlog_std *= clamp_open

    grads = {
        "policy": mlp_backward(params.policy, cache_p, dmean),
        "value": mlp_backward(params.value, cache_v,
                              (config.value_coeff * 2.0 * value_err / B)[:, None]),
        "log_std": dlog_std,
    }
    losses = {"policy": policy_loss, "value": value_loss,
              "entropy": entropy, "total": total}
    return losses, grads


def ppo_update(params: PolicyParams, buffer: TrajectoryBuffer, config: PPOConfig,
               rng, opt: Adam, bootstrap_values):
    """One PPO update over a full buffer; params and opt mutate in place.

    Returns mean losses across minibatches. Raises NonFiniteLossError
    (naming the minibatch) before applying a broken gradient.
    """
    adv, ret = compute_gae(buffer, config.gamma, config.gae_lambda, bootstrap_values)
    M = buffer.horizon * buffer.num_envs
    flat = {
        "obs": buffer.obs.reshape(M, -1),
        "pre_squash": buffer.pre_squash.reshape(M, -1),
        "log_prob_old": buffer.log_prob.reshape(M),
        "advantage": adv.reshape(M),
        "returns": ret.reshape(M),
    }
    a = flat["advantage"]
    flat["advantage"] = (a - a.mean()) / (a.std() + 1e-8)

    mb = min(config.minibatch_size, M)
    sums = {"policy": 0.0, "value": 0.0, "entropy": 0.0, "total": 0.0}
    count = 0
    for _ in range(config.epochs_per_update):
        perm = rng.permutation(M)
        for start in range(0, M - mb + 1, mb):
            idx = perm[start:start + mb]
            batch = {k: v[idx] for k, v in flat.items()}
            try:
                losses, grads = ppo_loss_and_grads(params, batch, config)
            except NonFiniteLossError as exc:
                raise NonFiniteLossError(
                    f"minibatch {count}: {exc}") from None
            clip_grads_(grads, config.max_grad_norm)
            opt.step(params, grads, config.learning_rate)
            for k in sums:
                sums[k] += losses[k]
            count += 1
    return {k: v / max(count, 1) for k, v in sums.items()}
