"""Replay trajectory files: one JSON object per line, header first.

Line 1 is a header naming the character, its links, and the frame period.
Every following line is one control-step frame holding world-space link poses
for the simulated and reference characters, the reward breakdown, the active
control input, and event flags.  Serialization is canonical (sorted keys,
no whitespace) so equal trajectories are equal bytes.
"""

import json
from pathlib import Path

import numpy as np

from charsim.character.fk import reference_pose
from charsim.dynamics import CONTROL_DT
from charsim.learn import policy_forward, sample_pre_squash

TRAJECTORY_VERSION = 1


class TrajectoryError(ValueError):
    """Raised for unreadable or schema-violating trajectory files."""


def make_header(model, task: str, seed: int) -> dict:
    return {
        "charsim_trajectory": TRAJECTORY_VERSION,
        "character": model.name,
        "task": task,
        "links": [link.name for link in model.links],
        "dt": CONTROL_DT,
        "seed": int(seed),
    }


def pose_block(positions, orientations) -> dict:
    return {
        "pos": [[float(x) for x in p] for p in positions],
        "quat": [[float(x) for x in q] for q in orientations],
    }


def sim_pose_block(model, state) -> dict:
    # reference_pose doubles as plain FK on the articulation state
    pose = reference_pose(model, state.root_position, state.root_orientation,
                          state.joint_q, state.joint_qd,
                          state.root_lin_vel, state.root_ang_vel)
    return pose_block(pose.link_positions, pose.link_orientations)


def make_frame(index: int, env, breakdown, done: bool, info: dict) -> dict:
    return {
        "frame": int(index),
        "phase": float(env.phase),
        "control": [float(env.control.direction), float(env.control.power)],
        "reward": {
            "pose": float(breakdown.pose_term),
            "velocity": float(breakdown.velocity_term),
            "com": float(breakdown.com_term),
            "angmom": float(breakdown.angmom_term),
            "total": float(breakdown.total),
        },
        "events": {
            "done": bool(done),
            "reason": str(info.get("reason", "")),
            "teleported": bool(info.get("teleported", False)),
        },
        # a diverged step leaves no usable simulated pose
        "sim": None if env.state is None else sim_pose_block(env.model, env.state),
        "ref": pose_block(env.reference.link_positions,
                           env.reference.link_orientations),
    }


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def save_trajectory(header: dict, frames, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_dumps(header)] + [_dumps(f) for f in frames]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_trajectory(path):
    """Returns (header, frames); validates the header tag and frame order."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise TrajectoryError(f"cannot read trajectory {path}: {e}") from None
    if not lines:
        raise TrajectoryError(f"{path}: empty trajectory file")
    try:
        header = json.loads(lines[0])
        frames = [json.loads(line) for line in lines[1:]]
    except json.JSONDecodeError as e:
        raise TrajectoryError(f"{path}: not valid JSON lines: {e}") from None
    if header.get("charsim_trajectory") != TRAJECTORY_VERSION:
        raise TrajectoryError(
            f"{path}: not a version-{TRAJECTORY_VERSION} trajectory header")
    for i, f in enumerate(frames):
        if f.get("frame") != i:
            raise TrajectoryError(f"{path}: frame {i} has index {f.get('frame')}")
    return header, frames


def record_episode(env, params, rng, deterministic: bool = False):
    """Roll one episode under the policy; returns the frame list."""
    obs = env.reset()
    frames = []
    done = False
    while not done:
        mean, log_std, _ = policy_forward(params, obs)
        u = mean if deterministic else sample_pre_squash(mean, log_std, rng)
        obs, breakdown, done, info = env.step(np.tanh(u))
        frames.append(make_frame(len(frames), env, breakdown, done, info))
    return frames
