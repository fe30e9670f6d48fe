from .blend import HEADING_RATE_LIMIT, BlendController, blend_controller
from .clip import (
    LOOP_CONTINUITY_TOL,
    PHASE_END_EPS,
    VELOCITY_DELTA_PHASE,
    ClipError,
    MotionClip,
    advance_phase,
)
from .commands import (
    DEFAULT_DIRECTION_RANGE,
    DEFAULT_HOLD_TIME,
    DEFAULT_POWER_RANGE,
    CommandStream,
    ControlInput,
    sample_control_input,
)
from .files import clip_from_dict, clip_to_dict, load_clip, write_clip
from .procedural import GENERATORS, build_clip
from .sampling import ClipSampler, clip_velocities, sample_clip
from .teleport import teleport_delta, teleport_reference

__all__ = [
    "BlendController",
    "ClipError",
    "ClipSampler",
    "CommandStream",
    "ControlInput",
    "DEFAULT_DIRECTION_RANGE",
    "DEFAULT_HOLD_TIME",
    "DEFAULT_POWER_RANGE",
    "GENERATORS",
    "HEADING_RATE_LIMIT",
    "LOOP_CONTINUITY_TOL",
    "MotionClip",
    "PHASE_END_EPS",
    "VELOCITY_DELTA_PHASE",
    "advance_phase",
    "blend_controller",
    "build_clip",
    "clip_from_dict",
    "clip_to_dict",
    "clip_velocities",
    "load_clip",
    "sample_clip",
    "sample_control_input",
    "teleport_delta",
    "teleport_reference",
    "write_clip",
]
