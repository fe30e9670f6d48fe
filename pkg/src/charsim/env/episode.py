"""Episode configuration, fall detection, and termination/teleport logic."""

from dataclasses import dataclass, field

import numpy as np

from charsim.character.model import CharacterModel, ReferencePose
from charsim.motion.commands import (
    DEFAULT_DIRECTION_RANGE,
    DEFAULT_HOLD_TIME,
    DEFAULT_POWER_RANGE,
)
from charsim.rotation import quat_rotate

from .observe import MIMIC, TASKS, USER_INPUT

# fall = watched link CoM below this fraction of its reference height
FALL_FRACTION = 0.6

# per-clip early-stop defaults; anything unlisted uses "default"
DEFAULT_EARLY_STOP = {"walk": 0.3, "run": 0.3, "idle": 0.3,
                      "kick": 0.25, "flip": 0.15, "default": 0.3}


@dataclass
class EpisodeConfig:
    task: str = MIMIC
    early_stop_threshold: float = 0.3
    teleport_enabled: bool = False
    teleport_threshold: float = 0.3
    max_episode_steps: int = 600
    reference_state_init: bool = False
    direction_range: tuple = DEFAULT_DIRECTION_RANGE
    power_range: tuple = DEFAULT_POWER_RANGE
    command_hold_time: float = DEFAULT_HOLD_TIME
    fall_fraction: float = FALL_FRACTION
    fall_link: str = None  # default: "head" if the model has one, else the root link

    def validate(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        for name in ("early_stop_threshold", "teleport_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0,1), got {v}")
        if self.teleport_enabled and self.task != USER_INPUT:
            raise ValueError("teleport_enabled is only valid for the user_input task")
        if self.max_episode_steps <= 0:
            raise ValueError("max_episode_steps must be positive")
        if not 0.0 < self.fall_fraction < 1.0:
            raise ValueError("fall_fraction must be in (0,1)")
        return self


@dataclass(frozen=True)
class StepVerdict:
    kind: str  # "continue" | "reset" | "teleport"
    reason: str = ""


CONTINUE = StepVerdict("continue")


def fall_link_index(model: CharacterModel, config: EpisodeConfig) -> int:
    name = config.fall_link
    if name is None:
        return (model.link_index("head") if "head" in model.arrays.link_names
                else model.root_link)
    return model.link_index(name)


def link_com_height(model: CharacterModel, link: int, R, p) -> float:
    a = model.arrays
    return float(p[link][1] + (R[link] @ a.com[link])[1])


def reference_link_com_height(model: CharacterModel, link: int,
                              reference: ReferencePose) -> float:
    c = quat_rotate(reference.link_orientations[link], model.arrays.com[link])
    return float(reference.link_positions[link][1] + c[1])


def check_termination(reward_total: float, fall_height: float,
                      reference_fall_height: float, steps: int,
                      clip_finished: bool, config: EpisodeConfig) -> StepVerdict:
    """Reset/teleport policy for one control step.

    Mimic resets on fall, early-stop, clip end, or the step cap. User-input
    never early-stops; with teleport enabled a low reward teleports the
    reference instead.
    """
    if fall_height < config.fall_fraction * reference_fall_height:
        return StepVerdict("reset", "fall")
    if steps >= config.max_episode_steps:
        return StepVerdict("reset", "max_steps")
    if clip_finished:
        return StepVerdict("reset", "clip_end")
    if config.task == MIMIC:
        if reward_total < config.early_stop_threshold:
            return StepVerdict("reset", "early_stop")
    elif config.teleport_enabled and reward_total < config.teleport_threshold:
        return StepVerdict("teleport")
    return CONTINUE
