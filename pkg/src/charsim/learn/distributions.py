"""Tanh-squashed diagonal Gaussian policy head."""

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def _softplus(x):
    return np.logaddexp(0.0, x)


def gaussian_logprob(u, mean, log_std):
    """Log-density of the pre-squash sample under N(mean, exp(log_std)^2)."""
    z = (u - mean) / np.exp(log_std)
    return np.sum(-0.5 * z * z - log_std - 0.5 * LOG_2PI, axis=-1)


def squash_correction(u):
    """log|d tanh(u)/du| summed over channels, in a stable form."""
    return np.sum(2.0 * (np.log(2.0) - u - _softplus(-2.0 * u)), axis=-1)


def squashed_logprob(u, mean, log_std):
    """Log-density of a = tanh(u) under the squashed Gaussian."""
    return gaussian_logprob(u, mean, log_std) - squash_correction(u)


def gaussian_entropy(log_std) -> float:
    """Analytic entropy of the pre-squash Gaussian."""
    return float(np.sum(log_std + 0.5 * (LOG_2PI + 1.0)))


def sample_pre_squash(mean, log_std, rng):
    return mean + np.exp(log_std) * rng.standard_normal(np.shape(mean))


def sample_and_logprob(mean, log_std, rng):
    """Draw a squashed action in (-1,1)^A with its log-probability."""
    u = sample_pre_squash(mean, log_std, rng)
    return np.tanh(u), squashed_logprob(u, mean, log_std)
