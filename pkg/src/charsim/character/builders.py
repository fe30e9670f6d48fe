"""Programmatic definitions of the bundled characters.

The shipped YAML assets are generated from these builders
(`python3 -m charsim.character.builders`); tests compare the two so the
files cannot drift from the code.
"""

import numpy as np

from charsim.dynamics import ContactModel

from .inertia import capsule_inertia
from .model import CharacterModel, JointSpec, LinkSpec, RenderCapsule, make_model


def _cap_link(name, p0, p1, radius, mass, spheres=()):
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    return LinkSpec(
        name=name,
        inertia=capsule_inertia(p0, p1, radius, mass=mass),
        contact_spheres=[(np.asarray(p, dtype=float), float(r)) for p, r in spheres],
        render_capsule=RenderCapsule(p0=p0, p1=p1, radius=float(radius)),
    )


def _hinge(name, parent, child, pa, ca, lo, hi, kp, kd, tau, actuated):
    return JointSpec(
        name=name, kind="hinge", parent=parent, child=child,
        parent_anchor=np.asarray(pa, dtype=float), child_anchor=np.asarray(ca, dtype=float),
        limits=np.array([[lo, hi]]), stiffness=kp, damping=kd, max_torque=tau,
        axis=np.array([0.0, 0.0, 1.0]), actuated=actuated,
    )


def _ball(name, parent, child, pa, ca, limits, kp, kd, tau):
    return JointSpec(
        name=name, kind="spherical", parent=parent, child=child,
        parent_anchor=np.asarray(pa, dtype=float), child_anchor=np.asarray(ca, dtype=float),
        limits=np.asarray(limits, dtype=float), stiffness=kp, damping=kd, max_torque=tau,
        actuated=True,
    )


def build_walker2d() -> CharacterModel:
    """Planar biped: torso + 2x(thigh, shin, foot), hips/knees actuated."""
    links = [_cap_link("torso", (0, -0.2, 0), (0, 0.2, 0), 0.07, 4.0)]
    joints = []
    for side in ("right", "left"):
        links += [
            _cap_link(f"{side}_thigh", (0, -0.185, 0), (0, 0.185, 0), 0.05, 1.2),
            _cap_link(f"{side}_shin", (0, -0.185, 0), (0, 0.185, 0), 0.04, 0.8),
            _cap_link(
                f"{side}_foot", (-0.06, 0, 0), (0.14, 0, 0), 0.03, 0.3,
                spheres=[((-0.06, 0, 0), 0.03), ((0.14, 0, 0), 0.03)],
            ),
        ]
        joints += [
            _hinge(f"{side}_hip", "torso", f"{side}_thigh",
                   (0, -0.2, 0), (0, 0.185, 0), -1.0, 2.2, 300.0, 30.0, 150.0, True),
            _hinge(f"{side}_knee", f"{side}_thigh", f"{side}_shin",
                   (0, -0.185, 0), (0, 0.185, 0), -2.6, 0.0, 300.0, 30.0, 150.0, True),
            _hinge(f"{side}_ankle", f"{side}_shin", f"{side}_foot",
                   (0, -0.185, 0), (0, 0, 0), -0.8, 0.8, 10.0, 1.0, 50.0, False),
        ]
    return make_model(
        name="walker2d",
        links=links,
        joints=joints,
        root="torso",
        tracked_links=[ln.name for ln in links],
        planar=True,
        contact=ContactModel(),
    )


def build_humanoid_lite() -> CharacterModel:
    """3D biped, 13 links, 21 actuated DOF (all joints but the neck)."""
    ball_lim = [[-1.5, 1.5]] * 3
    links = [
        _cap_link("pelvis", (0, -0.07, 0), (0, 0.07, 0), 0.10, 8.0,
                  spheres=[((0, -0.05, 0), 0.10)]),
        _cap_link("torso", (0, -0.18, 0), (0, 0.18, 0), 0.09, 10.0),
        _cap_link("head", (0, -0.03, 0), (0, 0.03, 0), 0.08, 3.0,
                  spheres=[((0, 0, 0), 0.08)]),
    ]
    joints = [
        _ball("chest", "pelvis", "torso", (0, 0.10, 0), (0, -0.22, 0),
              [[-0.5, 0.5]] * 3, 300.0, 30.0, 200.0),
        _hinge("neck", "torso", "head", (0, 0.22, 0), (0, -0.12, 0),
               -0.6, 0.6, 10.0, 2.0, 50.0, False),
    ]
    for side, z in (("right", -1.0), ("left", 1.0)):
        links += [
            _cap_link(f"{side}_thigh", (0, -0.21, 0), (0, 0.21, 0), 0.06, 4.0),
            _cap_link(f"{side}_shin", (0, -0.205, 0), (0, 0.205, 0), 0.045, 2.5),
            _cap_link(
                f"{side}_foot", (-0.05, -0.03, 0), (0.15, -0.03, 0), 0.03, 0.8,
                spheres=[((-0.05, -0.03, 0), 0.03), ((0.15, -0.03, 0), 0.03)],
            ),
            _cap_link(f"{side}_upper_arm", (0, -0.14, 0), (0, 0.14, 0), 0.04, 1.5),
            _cap_link(
                f"{side}_forearm", (0, -0.12, 0), (0, 0.12, 0), 0.035, 1.0,
                spheres=[((0, -0.12, 0), 0.035)],
            ),
        ]
        joints += [
            _ball(f"{side}_hip", "pelvis", f"{side}_thigh",
                  (0, -0.05, 0.09 * z), (0, 0.21, 0),
                  [[-0.7, 0.7], [-0.7, 0.7], [-1.0, 2.2]], 300.0, 30.0, 200.0),
            _hinge(f"{side}_knee", f"{side}_thigh", f"{side}_shin",
                   (0, -0.21, 0), (0, 0.205, 0), -2.6, 0.0, 300.0, 30.0, 150.0, True),
            _hinge(f"{side}_ankle", f"{side}_shin", f"{side}_foot",
                   (0, -0.205, 0), (0, 0, 0), -0.8, 0.8, 300.0, 30.0, 90.0, True),
            _ball(f"{side}_shoulder", "torso", f"{side}_upper_arm",
                  (0, 0.16, 0.13 * z), (0, 0.14, 0), ball_lim, 300.0, 30.0, 100.0),
            _hinge(f"{side}_elbow", f"{side}_upper_arm", f"{side}_forearm",
                   (0, -0.14, 0), (0, 0.12, 0), 0.0, 2.4, 300.0, 30.0, 60.0, True),
        ]
    return make_model(
        name="humanoid_lite",
        links=links,
        joints=joints,
        root="pelvis",
        tracked_links=["pelvis", "torso", "head",
                       "right_foot", "left_foot", "right_forearm", "left_forearm"],
        planar=False,
        contact=ContactModel(),
    )


BUILDERS = {
    "walker2d": build_walker2d,
    "humanoid_lite": build_humanoid_lite,
}


def main() -> None:
    from charsim.resources import asset_root

    from .files import write_model

    out = asset_root() / "characters"
    out.mkdir(parents=True, exist_ok=True)
    for name, build in BUILDERS.items():
        path = out / f"{name}.yaml"
        write_model(build(), path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
