"""Clip file format: versioned YAML, same family as the model format."""

import numpy as np
import yaml

from .clip import ClipError, MotionClip

FORMAT_VERSION = 1


def clip_from_dict(doc: dict, source: str = "<memory>") -> MotionClip:
    if not isinstance(doc, dict):
        raise ClipError(f"{source}: top level must be a mapping")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ClipError(f"{source}: unsupported format_version {doc.get('format_version')!r}")
    for key in ("name", "duration", "looping", "keyframes"):
        if key not in doc:
            raise ClipError(f"{source}: missing field '{key}'")
    frames = doc["keyframes"]
    if not isinstance(frames, list) or not frames:
        raise ClipError(f"{source}: keyframes must be a non-empty list")
    times, rp, rq, jq = [], [], [], []
    for i, f in enumerate(frames):
        for key in ("t", "root_position", "root_orientation", "joints"):
            if key not in f:
                raise ClipError(f"{source}: keyframes[{i}]: missing field '{key}'")
        times.append(float(f["t"]))
        rp.append(f["root_position"])
        rq.append(f["root_orientation"])
        jq.append(f["joints"])
    clip = MotionClip(
        name=str(doc["name"]),
        duration=float(doc["duration"]),
        looping=bool(doc["looping"]),
        times=np.asarray(times, dtype=float),
        root_pos=np.asarray(rp, dtype=float),
        root_quat=np.asarray(rq, dtype=float),
        joints=np.asarray(jq, dtype=float),
        character=str(doc.get("character", "")),
    )
    clip.validate()
    return clip


def load_clip(file_path) -> MotionClip:
    try:
        with open(file_path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as e:
        raise ClipError(f"cannot read {file_path}: {e}") from e
    except yaml.YAMLError as e:
        raise ClipError(f"parse error in {file_path}: {e}") from e
    return clip_from_dict(doc, source=str(file_path))


def clip_to_dict(clip: MotionClip) -> dict:
    frames = []
    for k in range(clip.times.shape[0]):
        frames.append({
            "t": float(clip.times[k]),
            "root_position": [float(x) for x in clip.root_pos[k]],
            "root_orientation": [float(x) for x in clip.root_quat[k]],
            "joints": [float(x) for x in clip.joints[k]],
        })
    return {
        "format_version": FORMAT_VERSION,
        "name": clip.name,
        "character": clip.character,
        "duration": float(clip.duration),
        "looping": bool(clip.looping),
        "keyframes": frames,
    }


def write_clip(clip: MotionClip, file_path) -> None:
    with open(file_path, "w") as fh:
        yaml.safe_dump(clip_to_dict(clip), fh, sort_keys=False, default_flow_style=None)
