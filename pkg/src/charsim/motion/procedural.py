"""Bundled procedural reference clips.

Analytic gait formulas sampled onto keyframes; root height is solved per
keyframe so the lowest contact sphere rests on the ground, plus an explicit
clearance term for airborne sections. The shipped YAML clips are generated
from here (`python3 -m charsim.motion.procedural`); tests compare the two.
"""

import numpy as np

from charsim.character import standing_root_height
from charsim.character.model import CharacterModel
from charsim.rotation import quat_from_rotvec

from .clip import MotionClip

KEYFRAMES = 61


def _pulse(phi, a, b):
    """Smooth 0->1->0 bump supported on [a, b]."""
    u = np.clip((phi - a) / (b - a), 0.0, 1.0)
    return np.sin(np.pi * u) ** 2


def _smootherstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def _dof(model: CharacterModel, joint: str, component: int = 0) -> int:
    j = model.joint_index(joint)
    return int(model.arrays.dof_off[j]) + component


def _assemble(model, name, duration, looping, q, x, z, clearance, root_rotvec):
    k = q.shape[0]
    times = np.linspace(0.0, duration, k)
    root_pos = np.empty((k, 3))
    root_quat = np.empty((k, 4))
    for i in range(k):
        root_pos[i] = (x[i], standing_root_height(model, q[i]) + clearance[i], z[i])
        root_quat[i] = quat_from_rotvec(root_rotvec[i])
    clip = MotionClip(
        name=name, duration=float(duration), looping=looping,
        times=times, root_pos=root_pos, root_quat=root_quat, joints=q,
        character=model.name,
    )
    clip.validate()
    return clip


def _leg_cycle(phi, hip_amp, knee_base, knee_amp, knee_lead, ankle_amp, ankle_lead):
    hip = hip_amp * np.sin(2.0 * np.pi * phi)
    knee = knee_base - knee_amp * np.maximum(0.0, np.sin(2.0 * np.pi * phi + knee_lead)) ** 2
    ankle = ankle_amp * np.sin(2.0 * np.pi * phi + ankle_lead)
    return hip, knee, ankle


# ------------------------------------------------------------------ walker


def _walker_gait(model, name, duration, speed, hip_amp, knee_base, knee_amp,
                 lean, bob_pitch=0.0):
    phi = np.linspace(0.0, 1.0, KEYFRAMES)
    q = np.zeros((KEYFRAMES, model.dof))
    for side, off in (("right", 0.0), ("left", 0.5)):
        hip, knee, ankle = _leg_cycle(phi + off, hip_amp, knee_base, knee_amp, 0.35, 0.12, 0.9)
        q[:, _dof(model, f"{side}_hip")] = hip
        q[:, _dof(model, f"{side}_knee")] = knee
        q[:, _dof(model, f"{side}_ankle")] = ankle
    pitch = lean + bob_pitch * np.sin(4.0 * np.pi * phi)
    rotvec = np.stack([np.zeros_like(phi), np.zeros_like(phi), pitch], axis=1)
    return _assemble(model, name, duration, True, q,
                     x=speed * duration * phi, z=np.zeros_like(phi),
                     clearance=np.zeros_like(phi), root_rotvec=rotvec)


def walker_idle(model: CharacterModel) -> MotionClip:
    phi = np.linspace(0.0, 1.0, KEYFRAMES)
    q = np.zeros((KEYFRAMES, model.dof))
    sway = 0.04 * np.sin(2.0 * np.pi * phi)
    for side, sign in (("right", 1.0), ("left", -1.0)):
        q[:, _dof(model, f"{side}_hip")] = 0.08 + sign * sway
        q[:, _dof(model, f"{side}_knee")] = -0.14 - 0.5 * sign * sway
        q[:, _dof(model, f"{side}_ankle")] = 0.02 * np.sin(2.0 * np.pi * phi)
    rotvec = np.stack([np.zeros_like(phi), np.zeros_like(phi),
                       0.02 * np.sin(2.0 * np.pi * phi)], axis=1)
    return _assemble(model, "idle", 0.8, True, q,
                     x=np.zeros_like(phi), z=np.zeros_like(phi),
                     clearance=np.zeros_like(phi), root_rotvec=rotvec)


def walker_walk(model: CharacterModel) -> MotionClip:
    return _walker_gait(model, "walk", duration=1.8, speed=0.3,
                        hip_amp=0.38, knee_base=-0.08, knee_amp=0.45, lean=-0.03)


def walker_run(model: CharacterModel) -> MotionClip:
    return _walker_gait(model, "run", duration=0.8, speed=1.5,
                        hip_amp=0.65, knee_base=-0.15, knee_amp=0.8,
                        lean=-0.08, bob_pitch=0.02)


def walker_kick(model: CharacterModel) -> MotionClip:
    phi = np.linspace(0.0, 1.0, KEYFRAMES)
    q = np.zeros((KEYFRAMES, model.dof))
    raise_p = _pulse(phi, 0.2, 0.7)
    q[:, _dof(model, "right_hip")] = 0.05 + 1.3 * raise_p
    q[:, _dof(model, "right_knee")] = -0.12 - 0.9 * _pulse(phi, 0.15, 0.45)
    q[:, _dof(model, "left_hip")] = 0.05 - 0.15 * raise_p
    q[:, _dof(model, "left_knee")] = -0.12 - 0.2 * raise_p
    rotvec = np.stack([np.zeros_like(phi), np.zeros_like(phi), 0.06 * raise_p], axis=1)
    return _assemble(model, "kick", 1.0, False, q,
                     x=np.zeros_like(phi), z=np.zeros_like(phi),
                     clearance=np.zeros_like(phi), root_rotvec=rotvec)


def walker_flip(model: CharacterModel) -> MotionClip:
    phi = np.linspace(0.0, 1.0, KEYFRAMES)
    q = np.zeros((KEYFRAMES, model.dof))
    crouch = _pulse(phi, 0.02, 0.30)
    tuck = _pulse(phi, 0.34, 0.82)
    land = _pulse(phi, 0.86, 1.0)
    for side in ("right", "left"):
        q[:, _dof(model, f"{side}_hip")] = 0.3 * crouch + 1.2 * tuck + 0.35 * land
        q[:, _dof(model, f"{side}_knee")] = np.maximum(
            -2.5, -1.2 * crouch - 1.9 * tuck - 0.5 * land)
    # full backward revolution: the angular-momentum content of the clip
    theta = 2.0 * np.pi * _smootherstep((phi - 0.30) / 0.56)
    rotvec = np.stack([np.zeros_like(phi), np.zeros_like(phi), theta], axis=1)
    return _assemble(model, "flip", 1.2, False, q,
                     x=-0.5 * _smootherstep((phi - 0.25) / 0.6), z=np.zeros_like(phi),
                     clearance=0.55 * _pulse(phi, 0.30, 0.86), root_rotvec=rotvec)


# ------------------------------------------------------------------ humanoid


def humanoid_idle(model: CharacterModel) -> MotionClip:
    phi = np.linspace(0.0, 1.0, KEYFRAMES)
    q = np.zeros((KEYFRAMES, model.dof))
    breathe = np.sin(2.0 * np.pi * phi)
    q[:, _dof(model, "chest", 2)] = 0.02 * breathe
    for side in ("right", "left"):
        q[:, _dof(model, f"{side}_hip", 2)] = 0.06
        q[:, _dof(model, f"{side}_knee")] = -0.1
        q[:, _dof(model, f"{side}_shoulder", 2)] = -0.05 + 0.02 * breathe
        q[:, _dof(model, f"{side}_elbow")] = 0.35
    rotvec = np.zeros((KEYFRAMES, 3))
    return _assemble(model, "idle", 0.8, True, q,
                     x=np.zeros_like(phi), z=np.zeros_like(phi),
                     clearance=np.zeros_like(phi), root_rotvec=rotvec)


def humanoid_run(model: CharacterModel) -> MotionClip:
    phi = np.linspace(0.0, 1.0, KEYFRAMES)
    q = np.zeros((KEYFRAMES, model.dof))
    q[:, _dof(model, "chest", 2)] = 0.04 * np.sin(4.0 * np.pi * phi)
    for side, off in (("right", 0.0), ("left", 0.5)):
        p = phi + off
        hip, knee, ankle = _leg_cycle(p, 0.7, -0.2, 0.85, 0.4, 0.15, 1.0)
        q[:, _dof(model, f"{side}_hip", 2)] = hip
        q[:, _dof(model, f"{side}_knee")] = knee
        q[:, _dof(model, f"{side}_ankle")] = ankle
        # arms counter-swing the same-side leg
        q[:, _dof(model, f"{side}_shoulder", 2)] = -0.5 * np.sin(2.0 * np.pi * p)
        q[:, _dof(model, f"{side}_elbow")] = 0.6 + 0.25 * np.sin(2.0 * np.pi * p)
    rotvec = np.stack([np.zeros_like(phi), np.zeros_like(phi),
                       np.full_like(phi, -0.10)], axis=1)
    return _assemble(model, "run", 0.8, True, q,
                     x=2.0 * 0.8 * phi, z=np.zeros_like(phi),
                     clearance=np.zeros_like(phi), root_rotvec=rotvec)


GENERATORS = {
    "walker2d": {
        "idle": walker_idle,
        "walk": walker_walk,
        "run": walker_run,
        "kick": walker_kick,
        "flip": walker_flip,
    },
    "humanoid_lite": {
        "idle": humanoid_idle,
        "run": humanoid_run,
    },
}


def build_clip(model: CharacterModel, name: str) -> MotionClip:
    try:
        return GENERATORS[model.name][name](model)
    except KeyError:
        raise KeyError(f"no bundled clip {name!r} for character {model.name!r}") from None


def main() -> None:
    from charsim.character import load_model
    from charsim.resources import asset_root, character_path

    from .files import write_clip

    for char, gens in GENERATORS.items():
        model = load_model(character_path(char))
        out = asset_root() / "clips" / char
        out.mkdir(parents=True, exist_ok=True)
        for name in gens:
            path = out / f"{name}.yaml"
            write_clip(build_clip(model, name), path)
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
