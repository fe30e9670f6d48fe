"""Run configuration: one JSON file names everything a run needs.

A run config is a flat JSON object with two nested sections (``episode``,
``ppo``) mirroring EpisodeConfig and PPOConfig field for field.  Unknown keys
are rejected at every level.  Asset fields (``character``, ``clip``,
``idle_clip``, ``run_clip``) accept either a bundled asset name or a
filesystem path; every referenced file must exist by the time
``load_run_config`` returns.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from charsim import resources
from charsim.character.files import load_model
from charsim.character.model import with_actuated_gains
from charsim.env import (
    ActionMode,
    CharEnv,
    EpisodeConfig,
    MIMIC,
    USER_INPUT,
    VecEnv,
    action_dim,
    observation_layout,
)
from charsim.learn import PPOConfig, Trainer, init_params, layout_signature
from charsim.motion.files import load_clip


class ConfigError(ValueError):
    """Raised for malformed, inconsistent, or unresolvable run configs."""


# env seeds are spaced away from the trainer/init seed so the sampling
# streams never collide across num_envs values
ENV_SEED_STRIDE = 1000


@dataclass
class RunConfig:
    """Everything a training, eval, or replay run needs, with defaults.

    task: "mimic" (track one clip) or "user_input" (steered idle/run blend).
    character: bundled character name or a model file path.
    clip: mimic reference clip (bundled name or path); mimic only.
    idle_clip / run_clip: blend endpoints; user_input only.
    action_mode: one of the ActionMode values.
    angmom_enabled: toggles the angular-momentum reward term; observations
        are unaffected so ablation pairs share a checkpoint layout.
    angmom_observation: toggles the angular-momentum observation segment.
    initial_gains: {"stiffness": s, "damping": d} replacing the PD gains of
        every actuated joint, e.g. to benchmark the gain-learning action
        modes from one fixed starting point. Null keeps the character file's
        authored gains.
    reward_weights / reward_scales: 4-vectors overriding the built-ins.
    seed: master seed; envs use seed*ENV_SEED_STRIDE + index.
    output_dir: where metrics.csv and checkpoints/ land (train only).
    """

    task: str = MIMIC
    character: str = "walker2d"
    clip: str = None
    idle_clip: str = None
    run_clip: str = None
    action_mode: str = ActionMode.TARGETS_ONLY.value
    angmom_enabled: bool = True
    angmom_observation: bool = True
    initial_gains: dict = None
    reward_weights: list = None
    reward_scales: list = None
    seed: int = 0
    output_dir: str = "runs/default"
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)

    # ------------------------------------------------------------ parsing

    @classmethod
    def from_dict(cls, doc: dict, source: str = "<memory>") -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError(f"{source}: run config must be a JSON object")
        doc = dict(doc)
        episode = _section(doc.pop("episode", {}), EpisodeConfig, "episode", source)
        ppo = _section(doc.pop("ppo", {}), PPOConfig, "ppo", source)
        known = {f.name for f in dataclasses.fields(cls)} - {"episode", "ppo"}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"{source}: unknown keys {unknown}")
        rc = cls(episode=episode, ppo=ppo, **doc)
        rc.episode.task = rc.task
        return rc.validate(source)

    def validate(self, source: str = "<config>") -> "RunConfig":
        try:
            ActionMode(self.action_mode)
        except ValueError:
            raise ConfigError(
                f"{source}: unknown action_mode {self.action_mode!r}, "
                f"expected one of {[m.value for m in ActionMode]}") from None
        if self.task == MIMIC:
            if not self.clip:
                raise ConfigError(f"{source}: mimic task needs 'clip'")
            if self.idle_clip or self.run_clip:
                raise ConfigError(
                    f"{source}: idle_clip/run_clip are user_input fields")
        elif self.task == USER_INPUT:
            if not (self.idle_clip and self.run_clip):
                raise ConfigError(
                    f"{source}: user_input task needs 'idle_clip' and 'run_clip'")
            if self.clip:
                raise ConfigError(f"{source}: 'clip' is a mimic field")
        for name in ("reward_weights", "reward_scales"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, (list, tuple)) or len(v) != 4):
                raise ConfigError(f"{source}: {name} must be a 4-vector or null")
        g = self.initial_gains
        if g is not None:
            if (not isinstance(g, dict) or set(g) != {"stiffness", "damping"}
                    or not all(isinstance(g[k], (int, float)) and g[k] >= 0
                               for k in g)):
                raise ConfigError(
                    f"{source}: initial_gains must be "
                    '{"stiffness": s, "damping": d} with s, d >= 0, or null')
        try:
            self.episode.validate()
            self.ppo.validate()
        except ValueError as e:
            raise ConfigError(f"{source}: {e}") from None
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("direction_range", "power_range"):
            d["episode"][key] = list(d["episode"][key])
        return d

    # ---------------------------------------------------------- resources

    def resolve(self, base_dir: Path) -> "RunConfig":
        """Resolve asset fields to absolute paths; every file must exist."""
        self.character = str(_resolve(
            self.character, base_dir, "character",
            lambda n: resources.character_path(n)))
        stem = Path(self.character).stem
        for name in ("clip", "idle_clip", "run_clip"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, str(_resolve(
                    v, base_dir, name, lambda n: resources.clip_path(stem, n))))
        return self


def _section(doc, cls, name: str, source: str):
    if isinstance(doc, cls):
        return doc
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: '{name}' must be an object")
    doc = dict(doc)
    if name == "episode":
        # task lives at the top level only
        doc.pop("task", None)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"{source}: unknown {name} keys {unknown}")
    out = cls(**doc)
    for key in ("direction_range", "power_range"):
        if hasattr(out, key):
            setattr(out, key, tuple(getattr(out, key)))
    return out


def _resolve(value: str, base_dir: Path, what: str, bundled) -> Path:
    value = str(value)
    looks_like_path = "/" in value or value.endswith((".yaml", ".yml"))
    if looks_like_path:
        p = Path(value)
        if not p.is_absolute():
            p = base_dir / p
        if not p.exists():
            raise ConfigError(f"{what}: file not found: {p}")
        return p.resolve()
    try:
        return bundled(value)
    except FileNotFoundError as e:
        raise ConfigError(f"{what}: {e}") from None


# ---------------------------------------------------------------- loading


def find_config(name_or_path: str) -> Path:
    """A path that exists wins; otherwise fall back to a bundled config name."""
    p = Path(name_or_path)
    if p.exists():
        return p.resolve()
    if "/" not in name_or_path:
        try:
            return resources.config_path(p.stem if p.suffix == ".json" else name_or_path)
        except FileNotFoundError as e:
            raise ConfigError(str(e)) from None
    raise ConfigError(f"config file not found: {name_or_path}")


def parse_override(spec: str):
    """``key=value`` or ``section.key=value``; value parsed as JSON, else string."""
    key, sep, raw = spec.partition("=")
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {spec!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def apply_overrides(doc: dict, overrides) -> dict:
    for spec in overrides or ():
        key, value = parse_override(spec)
        head, dot, tail = key.partition(".")
        if dot:
            sub = doc.setdefault(head, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"override {key!r}: {head!r} is not a section")
            sub[tail] = value
        else:
            doc[head] = value
    return doc


def load_run_config(name_or_path: str, overrides=None) -> RunConfig:
    path = find_config(name_or_path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON: {e}") from None
    apply_overrides(doc, overrides)
    rc = RunConfig.from_dict(doc, source=str(path))
    return rc.resolve(path.parent)


# --------------------------------------------------------------- building


def load_assets(rc: RunConfig):
    """Load the character model and the clips the task needs."""
    model = load_model(rc.character)
    if rc.initial_gains is not None:
        model = with_actuated_gains(
            model, rc.initial_gains["stiffness"], rc.initial_gains["damping"])
    if rc.task == MIMIC:
        clips = {"clip": load_clip(rc.clip)}
    else:
        clips = {"idle": load_clip(rc.idle_clip), "run": load_clip(rc.run_clip)}
    return model, clips


def make_env(rc: RunConfig, model, clips, seed: int) -> CharEnv:
    return CharEnv(
        model,
        config=dataclasses.replace(rc.episode),
        action_mode=ActionMode(rc.action_mode),
        reward_weights=rc.reward_weights,
        reward_scales=rc.reward_scales,
        angmom_reward=rc.angmom_enabled,
        angmom_obs=rc.angmom_observation,
        seed=seed,
        **clips,
    )


def make_params(rc: RunConfig, model):
    layout = observation_layout(rc.task, model, rc.angmom_observation)
    rng_init = np.random.default_rng(rc.seed)
    return init_params(
        rng_init, layout.total, action_dim(model, ActionMode(rc.action_mode)),
        layout_signature=layout_signature(model.name, layout))


def make_trainer(rc: RunConfig) -> Trainer:
    """Build the full training stack; creates output_dir only after all
    validation and asset loading has succeeded."""
    model, clips = load_assets(rc)
    vec = VecEnv.from_factory(
        lambda s: make_env(rc, model, clips, s),
        rc.ppo.num_envs, base_seed=rc.seed * ENV_SEED_STRIDE)
    params = make_params(rc, model)
    out = Path(rc.output_dir)
    return Trainer(
        vec, params, rc.ppo, seed=rc.seed,
        metrics_path=out / "metrics.csv",
        checkpoint_dir=out / "checkpoints",
        run_config=rc.to_dict())
