"""Fully-connected networks with explicit backpropagation, and the
actor-critic parameter container."""

from dataclasses import dataclass, field

import numpy as np

from .normalizer import RunningNormalizer

HIDDEN = 256
LOG_STD_MIN = -5.0
LOG_STD_MAX = 1.0
LOG_STD_INIT = -0.7


def _orthogonal(rng, shape, gain):
    a = rng.normal(size=shape)
    q, r = np.linalg.qr(a if shape[0] >= shape[1] else a.T)
    q = q * np.sign(np.diag(r))  # deterministic orientation
    if shape[0] < shape[1]:
        q = q.T
    return gain * q[: shape[0], : shape[1]]


def mlp_init(rng, sizes, final_gain: float = 1.0) -> dict:
    """Weights for a tanh MLP; hidden layers orthogonal sqrt(2), last `final_gain`."""
    params = {}
    last = len(sizes) - 2
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        gain = final_gain if i == last else np.sqrt(2.0)
        params[f"W{i + 1}"] = _orthogonal(rng, (a, b), gain)
        params[f"b{i + 1}"] = np.zeros(b)
    return params


def mlp_forward(params: dict, x: np.ndarray):
    """Two tanh hidden layers, linear head. Returns (out, cache)."""
    h1 = np.tanh(x @ params["W1"] + params["b1"])
    h2 = np.tanh(h1 @ params["W2"] + params["b2"])
    out = h2 @ params["W3"] + params["b3"]
    return out, (x, h1, h2)


def mlp_backward(params: dict, cache, dout: np.ndarray) -> dict:
    x, h1, h2 = cache
    grads = {"W3": h2.T @ dout, "b3": dout.sum(axis=0)}
    dh2 = (dout @ params["W3"].T) * (1.0 - h2 * h2)
    grads["W2"] = h1.T @ dh2
    grads["b2"] = dh2.sum(axis=0)
    dh1 = (dh2 @ params["W2"].T) * (1.0 - h1 * h1)
    grads["W1"] = x.T @ dh1
    grads["b1"] = dh1.sum(axis=0)
    return grads


@dataclass
class PolicyParams:
    """Actor, critic, exploration log-std, and the observation normalizer."""

    obs_dim: int
    act_dim: int
    policy: dict
    value: dict
    log_std: np.ndarray
    normalizer: RunningNormalizer
    layout_signature: str = ""

    def clipped_log_std(self) -> np.ndarray:
        return np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            obs_dim=self.obs_dim,
            act_dim=self.act_dim,
            policy={k: v.copy() for k, v in self.policy.items()},
            value={k: v.copy() for k, v in self.value.items()},
            log_std=self.log_std.copy(),
            normalizer=self.normalizer.copy(),
            layout_signature=self.layout_signature,
        )


def init_params(rng, obs_dim: int, act_dim: int, hidden: int = HIDDEN,
                layout_signature: str = "") -> PolicyParams:
    # zero final policy layer: the initial policy is exactly midpoint targets
    policy = mlp_init(rng, (obs_dim, hidden, hidden, act_dim), final_gain=0.0)
    value = mlp_init(rng, (obs_dim, hidden, hidden, 1), final_gain=1.0)
    return PolicyParams(
        obs_dim=obs_dim,
        act_dim=act_dim,
        policy=policy,
        value=value,
        log_std=np.full(act_dim, LOG_STD_INIT),
        normalizer=RunningNormalizer(obs_dim),
        layout_signature=layout_signature,
    )


def policy_forward(params: PolicyParams, obs):
    """(action mean, clipped log-std, value); obs may be one sample or a batch."""
    obs = np.asarray(obs, dtype=float)
    single = obs.ndim == 1
    if obs.shape[-1] != params.obs_dim:
        raise ValueError(
            f"observation length {obs.shape[-1]}, expected {params.obs_dim}")
    x = params.normalizer.apply(obs.reshape(-1, params.obs_dim))
    mean, _ = mlp_forward(params.policy, x)
    value, _ = mlp_forward(params.value, x)
    value = value[:, 0]
    if single:
        return mean[0], params.clipped_log_std(), float(value[0])
    return mean, params.clipped_log_std(), value
