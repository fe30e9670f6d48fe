"""Bundled asset lookup (characters, clips, configs)."""

from importlib import resources
from pathlib import Path


def asset_root() -> Path:
    return Path(resources.files("charsim")) / "assets"


def character_path(name: str) -> Path:
    p = asset_root() / "characters" / f"{name}.yaml"
    if not p.exists():
        have = sorted(q.stem for q in (asset_root() / "characters").glob("*.yaml"))
        raise FileNotFoundError(f"no bundled character {name!r}, have {have}")
    return p


def clip_path(character: str, name: str) -> Path:
    p = asset_root() / "clips" / character / f"{name}.yaml"
    if not p.exists():
        d = asset_root() / "clips" / character
        have = sorted(q.stem for q in d.glob("*.yaml")) if d.exists() else []
        raise FileNotFoundError(f"no bundled clip {name!r} for {character}, have {have}")
    return p


def config_path(name: str) -> Path:
    p = asset_root() / "configs" / f"{name}.json"
    if not p.exists():
        have = sorted(q.stem for q in (asset_root() / "configs").glob("*.json"))
        raise FileNotFoundError(f"no bundled config {name!r}, have {have}")
    return p
