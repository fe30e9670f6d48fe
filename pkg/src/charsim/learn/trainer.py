"""Rollout collection and the update loop behind the training CLI."""

import csv
import time
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .distributions import sample_pre_squash, squashed_logprob
from .gae import TrajectoryBuffer
from .nets import PolicyParams, init_params, policy_forward
from .ppo import Adam, PPOConfig, ppo_update

METRICS_COLUMNS = [
    "step", "mean_reward", "mean_episode_length", "policy_loss", "value_loss",
    "entropy", "mean_pose_term", "mean_velocity_term", "mean_com_term",
    "mean_angmom_term",
]
TERM_NAMES = ("pose_term", "velocity_term", "com_term", "angmom_term")


def layout_signature(model_name: str, layout) -> str:
    segs = ";".join(f"{name}:{n}" for name, n in layout.segments)
    return f"{layout.task}|{model_name}|{segs}"


class Trainer:
    """Owns the vectorized env, params, optimizer state, and metrics output."""

    def __init__(self, vec_env, params: PolicyParams, config: PPOConfig,
                 seed: int = 0, metrics_path=None, checkpoint_dir=None,
                 checkpoint_every_updates: int = 50, run_config=None):
        config.validate()
        if len(vec_env) != config.num_envs:
            raise ValueError(
                f"config says {config.num_envs} envs, vec env has {len(vec_env)}")
        self.vec = vec_env
        self.params = params
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.opt = Adam(params)
        self.metrics_path = Path(metrics_path) if metrics_path else None
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.checkpoint_every = checkpoint_every_updates
        self.run_config = run_config or {}
        self.global_step = 0
        self.updates = 0
        self.request_stop = False
        self._obs = None
        self._ep_ret = np.zeros(len(vec_env))
        self._ep_len = np.zeros(len(vec_env), dtype=int)
        self._last_ep_reward = 0.0
        self._last_ep_length = 0.0
        self._csv = None
        self._writer = None
        if self.checkpoint_dir:
            self.checkpoint_dir.mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------ rollout

    def collect(self):
        cfg = self.config
        buf = TrajectoryBuffer.allocate(cfg.horizon, len(self.vec),
                                        self.params.obs_dim, self.params.act_dim)
        if self._obs is None:
            self._obs = self.vec.reset_all()
        completed = []
        term_sums = np.zeros(4)
        for t in range(cfg.horizon):
            obs = self._obs
            self.params.normalizer.update(obs)
            mean, log_std, value = policy_forward(self.params, obs)
            u = sample_pre_squash(mean, log_std, self.rng)
            logp = squashed_logprob(u, mean, log_std)
            next_obs, totals, dones, infos = self.vec.step_all(np.tanh(u))
            buf.obs[t] = obs
            buf.pre_squash[t] = u
            buf.log_prob[t] = logp
            buf.reward[t] = totals
            buf.value[t] = value
            buf.done[t] = dones
            self._ep_ret += totals
            self._ep_len += 1
            for i, done in enumerate(dones):
                if done:
                    completed.append((self._ep_ret[i], self._ep_len[i]))
                    self._ep_ret[i] = 0.0
                    self._ep_len[i] = 0
            for info in infos:
                b = info["breakdown"]
                term_sums += (b.pose_term, b.velocity_term, b.com_term, b.angmom_term)
            self._obs = next_obs
        _, _, bootstrap = policy_forward(self.params, self._obs)
        self.global_step += cfg.horizon * len(self.vec)
        term_means = term_sums / (cfg.horizon * len(self.vec))
        return buf, bootstrap, completed, term_means

    # ------------------------------------------------------------- update

    def update_once(self) -> dict:
        buf, bootstrap, completed, term_means = self.collect()
        losses = ppo_update(self.params, buf, self.config, self.rng, self.opt,
                            bootstrap)
        if completed:
            self._last_ep_reward = float(np.mean([r for r, _ in completed]))
            self._last_ep_length = float(np.mean([n for _, n in completed]))
        row = {
            "step": self.global_step,
            # cumulative reward of completed episodes, the usual learning
            # curve; the per-step tracking quality is in the term columns
            "mean_reward": self._last_ep_reward,
            "mean_episode_length": self._last_ep_length,
            "policy_loss": losses["policy"],
            "value_loss": losses["value"],
            "entropy": losses["entropy"],
        }
        for name, v in zip(TERM_NAMES, term_means):
            row["mean_" + name] = float(v)
        self.updates += 1
        self._write_metrics(row)
        if self.checkpoint_dir and self.updates % self.checkpoint_every == 0:
            self.save("latest.npz")
        return row

    def train(self, total_steps: int = None, callback=None):
        total = total_steps or self.config.total_steps
        while self.global_step < total and not self.request_stop:
            row = self.update_once()
            if callback:
                callback(row)
        self.close()
        if self.checkpoint_dir:
            self.save("final.npz")
        return self.global_step

    # ------------------------------------------------------------ output

    def save(self, name: str) -> Path:
        path = (self.checkpoint_dir or Path(".")) / name
        save_checkpoint(self.params, self.run_config, self.global_step, path)
        return path

    def _write_metrics(self, row: dict):
        if not self.metrics_path:
            return
        if self._writer is None:
            self.metrics_path.parent.mkdir(parents=True, exist_ok=True)
            self._csv = open(self.metrics_path, "w", newline="")
            self._writer = csv.writer(self._csv)
            self._writer.writerow(METRICS_COLUMNS)
        self._writer.writerow(
            [row["step"]] + [f"{row[c]:.10g}" for c in METRICS_COLUMNS[1:]])
        self._csv.flush()

    def close(self):
        if self._csv:
            self._csv.close()
            self._csv = None
            self._writer = None
