"""Motion clips: keyframe storage, validation, and the phase variable."""

from dataclasses import dataclass, field

import numpy as np

# value saturates just below 1 so Phase stays in [0,1) after a clip finishes
PHASE_END_EPS = 1e-9

# finite-difference half-width for clip velocities, in phase units
VELOCITY_DELTA_PHASE = 0.005

# looping clips must close their joint trajectories this tightly (rad)
LOOP_CONTINUITY_TOL = 1e-2


class ClipError(ValueError):
    """Raised for malformed clips or clip/model mismatches."""


@dataclass
class MotionClip:
    """Time-sorted keyframes of a reference motion.

    joints holds per-DOF rotations (hinge angle or exponential-map component)
    in the character's canonical DOF order.
    """

    name: str
    duration: float
    looping: bool
    times: np.ndarray  # (K,)
    root_pos: np.ndarray  # (K, 3)
    root_quat: np.ndarray  # (K, 4)
    joints: np.ndarray  # (K, D)
    character: str = ""

    @property
    def dof_count(self) -> int:
        return self.joints.shape[1]

    @property
    def cycle_offset(self) -> np.ndarray:
        """Root translation accumulated over one cycle (looping clips)."""
        off = self.root_pos[-1] - self.root_pos[0]
        return off if self.looping else np.zeros(3)

    def validate(self) -> None:
        if not self.duration > 0.0:
            raise ClipError(f"clip {self.name}: duration must be positive")
        k = self.times.shape[0]
        if k < 2:
            raise ClipError(f"clip {self.name}: needs at least 2 keyframes")
        if self.root_pos.shape != (k, 3) or self.root_quat.shape != (k, 4):
            raise ClipError(f"clip {self.name}: root track shape mismatch")
        if self.joints.ndim != 2 or self.joints.shape[0] != k:
            raise ClipError(f"clip {self.name}: joint track shape mismatch")
        if abs(self.times[0]) > 1e-9:
            raise ClipError(f"clip {self.name}: first keyframe must be at time 0")
        if abs(self.times[-1] - self.duration) > 1e-9:
            raise ClipError(f"clip {self.name}: last keyframe must be at the duration")
        if np.any(np.diff(self.times) <= 0.0):
            raise ClipError(f"clip {self.name}: keyframe times must be strictly increasing")
        norms = np.linalg.norm(self.root_quat, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise ClipError(f"clip {self.name}: keyframe {bad} root orientation is not unit")
        self.root_quat = self.root_quat / norms[:, None]
        if self.looping:
            gap = np.abs(self.joints[-1] - self.joints[0])
            if np.any(gap > LOOP_CONTINUITY_TOL):
                d = int(np.argmax(gap))
                raise ClipError(
                    f"clip {self.name}: looping clip discontinuous at DOF {d} "
                    f"({gap[d]:.3g} rad)")


def advance_phase(phase: float, dt: float, clip: MotionClip):
    """Advance the phase by dt seconds; returns (phase, finished)."""
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    v = phase + dt / clip.duration
    if clip.looping:
        return v % 1.0, False
    if v >= 1.0:
        return 1.0 - PHASE_END_EPS, True
    return v, False
