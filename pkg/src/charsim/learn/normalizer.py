"""Running observation normalizer with parallel-batch Welford updates."""

import numpy as np

# normalized features are clipped here; keeps saturated tanh inputs bounded
NORMALIZED_CLIP = 10.0


class RunningNormalizer:
    """Running mean/variance over observations; freezable for evaluation."""

    def __init__(self, dim: int, eps: float = 1e-8):
        self.dim = dim
        self.eps = eps
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 0.0
        self.frozen = False

    def update(self, batch):
        if self.frozen:
            return
        batch = np.asarray(batch, dtype=float).reshape(-1, self.dim)
        n = batch.shape[0]
        if n == 0:
            return
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        if self.count == 0.0:
            self.mean, self.var, self.count = b_mean, b_var, float(n)
        else:
            tot = self.count + n
            delta = b_mean - self.mean
            self.mean = self.mean + delta * (n / tot)
            m2 = self.var * self.count + b_var * n + delta ** 2 * self.count * n / tot
            self.var = m2 / tot
            self.count = tot
        np.maximum(self.var, self.eps, out=self.var)

    def apply(self, obs):
        obs = np.asarray(obs, dtype=float)
        if self.count == 0.0:
            return np.clip(obs, -NORMALIZED_CLIP, NORMALIZED_CLIP)
        z = (obs - self.mean) / np.sqrt(self.var + self.eps)
        return np.clip(z, -NORMALIZED_CLIP, NORMALIZED_CLIP)

    def copy(self) -> "RunningNormalizer":
        out = RunningNormalizer(self.dim, self.eps)
        out.mean = self.mean.copy()
        out.var = self.var.copy()
        out.count = self.count
        out.frozen = self.frozen
        return out
