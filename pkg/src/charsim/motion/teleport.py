"""Reference teleport: re-anchor the reference horizontally onto the agent."""

import numpy as np

from charsim.character.model import ReferencePose


def teleport_reference(pose: ReferencePose, sim_com) -> ReferencePose:
    """Shift the reference horizontally so its CoM sits over sim_com.

    Pure horizontal translation: vertical position, orientation, joint
    rotations, velocities, and momentum are untouched, so heading and phase
    are preserved by construction. Returns the shift applied via the pose.
    """
    delta = np.asarray(sim_com, dtype=float) - pose.com_position
    delta[1] = 0.0
    out = pose.copy()
    out.root_position = out.root_position + delta
    out.link_positions = out.link_positions + delta
    out.com_position = out.com_position + delta
    return out


def teleport_delta(pose: ReferencePose, sim_com) -> np.ndarray:
    """The horizontal shift teleport_reference would apply."""
    delta = np.asarray(sim_com, dtype=float) - pose.com_position
    delta[1] = 0.0
    return delta
