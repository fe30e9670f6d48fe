"""Versioned npz checkpoints: weights, normalizer, layout metadata."""

import json

import numpy as np

from .nets import PolicyParams
from .normalizer import RunningNormalizer

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(params: PolicyParams, config, step: int, path):
    """config may be any json-serializable mapping (or a dataclass __dict__)."""
    if hasattr(config, "__dict__") and not isinstance(config, dict):
        config = dict(config.__dict__)
    arrays = {
        "version": np.array(CHECKPOINT_VERSION),
        "step": np.array(int(step)),
        "obs_dim": np.array(params.obs_dim),
        "act_dim": np.array(params.act_dim),
        "layout_signature": np.array(params.layout_signature),
        "config_json": np.array(json.dumps(config or {}, sort_keys=True)),
        "log_std": params.log_std,
        "norm_mean": params.normalizer.mean,
        "norm_var": params.normalizer.var,
        "norm_count": np.array(params.normalizer.count),
        "norm_frozen": np.array(params.normalizer.frozen),
    }
    for k, v in params.policy.items():
        arrays[f"policy__{k}"] = v
    for k, v in params.value.items():
        arrays[f"value__{k}"] = v
    np.savez(path, **arrays)


def load_checkpoint(path, expect_signature: str = None):
    """Returns (params, meta) with meta = {step, config, version}."""
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from None
    version = int(data["version"])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} not supported (expected {CHECKPOINT_VERSION})")
    signature = str(data["layout_signature"])
    if expect_signature is not None and signature != expect_signature:
        raise CheckpointError(
            "observation layout mismatch:\n"
            f"  checkpoint: {signature}\n  expected:   {expect_signature}")
    obs_dim = int(data["obs_dim"])
    norm = RunningNormalizer(obs_dim)
    norm.mean = data["norm_mean"].copy()
    norm.var = data["norm_var"].copy()
    norm.count = float(data["norm_count"])
    norm.frozen = bool(data["norm_frozen"])
    params = PolicyParams(
        obs_dim=obs_dim,
        act_dim=int(data["act_dim"]),
        policy={k.split("__", 1)[1]: data[k].copy() for k in data.files
                if k.startswith("policy__")},
        value={k.split("__", 1)[1]: data[k].copy() for k in data.files
               if k.startswith("value__")},
        log_std=data["log_std"].copy(),
        normalizer=norm,
        layout_signature=signature,
    )
    meta = {"step": int(data["step"]), "version": version,
            "config": json.loads(str(data["config_json"]))}
    return params, meta
