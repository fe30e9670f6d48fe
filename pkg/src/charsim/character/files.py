"""Character model file format: versioned YAML, load/validate/write."""

import numpy as np
import yaml

from charsim.dynamics import ContactModel, SpatialInertia

from .inertia import capsule_inertia
from .model import CharacterModel, JointSpec, LinkSpec, RenderCapsule, make_model

FORMAT_VERSION = 1


class ModelFileError(ValueError):
    """Raised for parse or schema problems in a model file."""


def _need(d: dict, key: str, path: str):
    if not isinstance(d, dict) or key not in d:
        raise ModelFileError(f"{path}: missing field '{key}'")
    return d[key]


def _vec3(v, path: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ModelFileError(f"{path}: expected a 3-vector, got {v!r}")
    return a


def _parse_link(d: dict, path: str) -> LinkSpec:
    name = str(_need(d, "name", path))
    cap = None
    if "capsule" in d:
        c = d["capsule"]
        cap = RenderCapsule(
            p0=_vec3(_need(c, "p0", f"{path}.capsule"), f"{path}.capsule.p0"),
            p1=_vec3(_need(c, "p1", f"{path}.capsule"), f"{path}.capsule.p1"),
            radius=float(_need(c, "radius", f"{path}.capsule")),
        )
    if "mass" in d:
        rot = np.asarray(_need(d, "rot_inertia", path), dtype=float)
        if rot.shape != (3, 3):
            raise ModelFileError(f"{path}.rot_inertia: expected a 3x3 matrix")
        si = SpatialInertia(
            mass=float(d["mass"]),
            com_offset=_vec3(_need(d, "com_offset", path), f"{path}.com_offset"),
            rot_inertia=rot,
        )
    elif cap is not None and "density" in d:
        si = capsule_inertia(cap.p0, cap.p1, cap.radius, density=float(d["density"]))
    else:
        raise ModelFileError(f"{path}: needs explicit mass/com_offset/rot_inertia or capsule+density")
    spheres = []
    for k, s in enumerate(d.get("contact_spheres", []) or []):
        sp = f"{path}.contact_spheres[{k}]"
        spheres.append((_vec3(_need(s, "pos", sp), f"{sp}.pos"), float(_need(s, "radius", sp))))
    return LinkSpec(name=name, inertia=si, contact_spheres=spheres, render_capsule=cap)


def _parse_joint(d: dict, path: str) -> JointSpec:
    kind = str(_need(d, "kind", path))
    limits = np.asarray(_need(d, "limits", path), dtype=float)
    if limits.ndim != 2 or limits.shape[1] != 2:
        raise ModelFileError(f"{path}.limits: expected a (dof, 2) table")
    axis = _vec3(_need(d, "axis", path), f"{path}.axis") if kind == "hinge" else None
    return JointSpec(
        name=str(_need(d, "name", path)),
        kind=kind,
        parent=str(_need(d, "parent", path)),
        child=str(_need(d, "child", path)),
        parent_anchor=_vec3(_need(d, "parent_anchor", path), f"{path}.parent_anchor"),
        child_anchor=_vec3(_need(d, "child_anchor", path), f"{path}.child_anchor"),
        limits=limits,
        stiffness=float(d.get("stiffness", 0.0)),
        damping=float(d.get("damping", 0.0)),
        max_torque=float(d.get("max_torque", 100.0)),
        axis=axis,
        actuated=bool(d.get("actuated", False)),
    )


def model_from_dict(doc: dict, source: str = "<memory>") -> CharacterModel:
    if not isinstance(doc, dict):
        raise ModelFileError(f"{source}: top level must be a mapping")
    version = _need(doc, "format_version", source)
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{source}: unsupported format_version {version!r}")
    links = [_parse_link(d, f"links[{i}]") for i, d in enumerate(_need(doc, "links", source))]
    joints = [_parse_joint(d, f"joints[{i}]") for i, d in enumerate(_need(doc, "joints", source))]
    cd = doc.get("contact", {}) or {}
    contact = ContactModel(
        ground_height=float(cd.get("ground_height", 0.0)),
        normal_stiffness=float(cd.get("normal_stiffness", 2.0e4)),
        normal_damping=float(cd.get("normal_damping", 300.0)),
        friction_coeff=float(cd.get("friction_coeff", 1.0)),
    )
    tracked = _need(doc, "tracked_links", source)
    if not isinstance(tracked, list):
        raise ModelFileError(f"{source}: tracked_links must be a list of link names")
    return make_model(
        name=str(doc.get("name", "unnamed")),
        links=links,
        joints=joints,
        root=str(_need(doc, "root", source)),
        tracked_links=[str(n) for n in tracked],
        planar=bool(doc.get("planar", False)),
        contact=contact,
    )


def load_model(file_path) -> CharacterModel:
    """Load and validate a character model file.

    Raises ModelFileError on parse/schema problems (with line or field info)
    and ModelValidationError when an invariant is violated.
    """
    try:
        with open(file_path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as e:
        raise ModelFileError(f"cannot read {file_path}: {e}") from e
    except yaml.YAMLError as e:
        raise ModelFileError(f"parse error in {file_path}: {e}") from e
    return model_from_dict(doc, source=str(file_path))


def model_to_dict(model: CharacterModel) -> dict:
    links = []
    for ln in model.links:
        d = {
            "name": ln.name,
            "mass": float(ln.inertia.mass),
            "com_offset": [float(x) for x in ln.inertia.com_offset],
            "rot_inertia": [[float(x) for x in row] for row in ln.inertia.rot_inertia],
        }
        if ln.render_capsule is not None:
            c = ln.render_capsule
            d["capsule"] = {
                "p0": [float(x) for x in c.p0],
                "p1": [float(x) for x in c.p1],
                "radius": float(c.radius),
            }
        if ln.contact_spheres:
            d["contact_spheres"] = [
                {"pos": [float(x) for x in pos], "radius": float(r)}
                for pos, r in ln.contact_spheres
            ]
        links.append(d)

    actuated = set(model.actuated_joints)
    joints = []
    for j, jm in enumerate(model.joints):
        d = {
            "name": jm.name,
            "kind": jm.kind,
            "parent": model.links[jm.parent_link].name,
            "child": model.links[jm.child_link].name,
            "parent_anchor": [float(x) for x in jm.parent_anchor],
            "child_anchor": [float(x) for x in jm.child_anchor],
            "limits": [[float(lo), float(hi)] for lo, hi in jm.limits],
            "stiffness": float(jm.stiffness),
            "damping": float(jm.damping),
            "max_torque": float(jm.max_torque),
            "actuated": j in actuated,
        }
        if jm.axis is not None:
            d["axis"] = [float(x) for x in jm.axis]
        joints.append(d)

    c = model.contact
    return {
        "format_version": FORMAT_VERSION,
        "name": model.name,
        "planar": bool(model.planar),
        "root": model.links[model.root_link].name,
        "contact": {
            "ground_height": float(c.ground_height),
            "normal_stiffness": float(c.normal_stiffness),
            "normal_damping": float(c.normal_damping),
            "friction_coeff": float(c.friction_coeff),
        },
        "links": links,
        "joints": joints,
        "tracked_links": [model.links[i].name for i in model.tracked_links],
    }


def write_model(model: CharacterModel, file_path) -> None:
    with open(file_path, "w") as fh:
        yaml.safe_dump(model_to_dict(model), fh, sort_keys=False, default_flow_style=None)
