"""Steering-session wire messages: hello, frame, control, verbs, error.

Every message is one JSON object serialized canonically (sorted keys, no
whitespace), one websocket text frame per message.  The hello message opens
each session and carries the protocol version; a client talking a different
version should disconnect.
"""

import json
import math

from charsim.dynamics import CONTROL_DT
from charsim.motion import ControlInput
from charsim.rotation import wrap_angle

PROTOCOL_VERSION = 1

CLIENT_TYPES = ("control", "pause", "resume", "reset")


class ProtocolError(ValueError):
    """A message that does not follow the schema; ignored with a warning."""


def serialize(message: dict) -> str:
    return json.dumps(message, sort_keys=True, separators=(",", ":"))


def deserialize(text) -> dict:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError("message is not UTF-8") from None
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, RecursionError):
        raise ProtocolError("message is not valid JSON") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("type"), str):
        raise ProtocolError("message must be an object with a string 'type'")
    return doc


def make_hello(model, task: str) -> dict:
    capsules = []
    for link in model.links:
        c = link.render_capsule
        capsules.append(None if c is None else {
            "p0": [float(x) for x in c.p0],
            "p1": [float(x) for x in c.p1],
            "radius": float(c.radius),
        })
    return {
        "type": "hello",
        "protocol": PROTOCOL_VERSION,
        "character": model.name,
        "task": task,
        "links": [link.name for link in model.links],
        "capsules": capsules,
        "dt": CONTROL_DT,
    }


def make_frame_message(frame_index: int, env, breakdown, events: dict) -> dict:
    # imported here: cli.trajectory pulls in the learn stack, which the
    # protocol-only tests should not need
    from charsim.cli.trajectory import pose_block, sim_pose_block

    return {
        "type": "frame",
        "frame": int(frame_index),
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
            "teleported": bool(events.get("teleported", False)),
            "fell": bool(events.get("fell", False)),
            "reset": bool(events.get("reset", False)),
            "paused": bool(events.get("paused", False)),
        },
        "sim": None if env.state is None else sim_pose_block(env.model, env.state),
        "ref": pose_block(env.reference.link_positions,
                          env.reference.link_orientations),
    }


def make_error(message: str) -> dict:
    return {"type": "error", "message": str(message)}


def _number(doc: dict, key: str) -> float:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProtocolError(f"'{key}' must be a number")
    v = float(v)
    if not math.isfinite(v):
        raise ProtocolError(f"'{key}' must be finite")
    return v


def parse_client_message(text):
    """Returns (kind, ControlInput-or-None).

    Control values are clamped, never rejected: power to [0,1], direction
    wrapped to [-pi, pi].  Anything outside the schema raises ProtocolError.
    """
    doc = deserialize(text)
    kind = doc["type"]
    if kind not in CLIENT_TYPES:
        raise ProtocolError(f"unknown client message type {kind!r}")
    if kind != "control":
        return kind, None
    direction = _number(doc, "direction")
    if not -math.pi <= direction <= math.pi:
        # wrap only when needed; the modulo costs an ulp on in-range values
        direction = float(wrap_angle(direction))
    power = min(max(_number(doc, "power"), 0.0), 1.0)
    return kind, ControlInput(direction=direction, power=power)
