"""User steering commands and their training-time sampling."""

from dataclasses import dataclass

import numpy as np

DEFAULT_DIRECTION_RANGE = (-np.pi / 4.0, np.pi / 4.0)
DEFAULT_POWER_RANGE = (0.0, 1.0)
DEFAULT_HOLD_TIME = 2.0


@dataclass
class ControlInput:
    """One steering command: heading change (rad) and blend power in [0,1]."""

    direction: float = 0.0
    power: float = 0.0


def sample_control_input(rng, direction_range=DEFAULT_DIRECTION_RANGE,
                         power_range=DEFAULT_POWER_RANGE) -> ControlInput:
    d0, d1 = direction_range
    p0, p1 = power_range
    if d1 < d0 or p1 < p0:
        raise ValueError("command sample range is inverted")
    if not (0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0):
        raise ValueError("power range must lie in [0,1]")
    return ControlInput(
        direction=float(rng.uniform(d0, d1)),
        power=float(rng.uniform(p0, p1)),
    )


class CommandStream:
    """Holds each sampled command for hold_time seconds, then resamples."""

    def __init__(self, rng, direction_range=DEFAULT_DIRECTION_RANGE,
                 power_range=DEFAULT_POWER_RANGE, hold_time=DEFAULT_HOLD_TIME):
        self.rng = rng
        self.direction_range = direction_range
        self.power_range = power_range
        self.hold_time = float(hold_time)
        self.current = sample_control_input(rng, direction_range, power_range)
        self._remaining = self.hold_time

    def step(self, dt: float) -> ControlInput:
        self._remaining -= dt
        if self._remaining <= 0.0:
            self.current = sample_control_input(self.rng, self.direction_range, self.power_range)
            self._remaining = self.hold_time
        return self.current
