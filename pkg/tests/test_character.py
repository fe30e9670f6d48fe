"""Character model loading, inertia authoring, and forward kinematics."""

import numpy as np
import pytest

from charsim.character import (
    JointSpec,
    LinkSpec,
    ModelFileError,
    build_humanoid_lite,
    build_walker2d,
    capsule_inertia,
    forward_kinematics,
    joint_rotations_from_poses,
    load_model,
    make_model,
    model_from_dict,
    reference_pose,
    standing_root_height,
    with_actuated_gains,
    write_model,
)
from charsim.dynamics import ModelValidationError, SpatialInertia
from charsim.dynamics.engine import angular_momentum, center_of_mass, link_kinematics
from charsim.dynamics.types import ArticulationState
from charsim.resources import character_path
from charsim.rotation import quat_from_rotvec, quat_geodesic_angle, quat_mul, quat_rotate


def _ball(mass=1.0):
    return SpatialInertia(mass=mass, com_offset=np.zeros(3), rot_inertia=0.01 * np.eye(3))


def _link(name):
    return LinkSpec(name=name, inertia=_ball())


def _joint(name, parent, child, actuated=True):
    return JointSpec(
        name=name, kind="hinge", parent=parent, child=child,
        parent_anchor=np.array([0.0, -0.1, 0.0]), child_anchor=np.array([0.0, 0.1, 0.0]),
        limits=np.array([[-3.0, 3.0]]), stiffness=1.0, damping=0.1, max_torque=10.0,
        axis=np.array([0.0, 0.0, 1.0]), actuated=actuated,
    )


# ---------------------------------------------------------------- loading


def test_bundled_walker2d_loads():
    m = load_model(character_path("walker2d"))
    assert m.n_links == 7
    assert m.planar
    assert len(m.actuated_joints) == 4
    assert all(m.joints[j].kind == "hinge" for j in m.actuated_joints)


def test_bundled_humanoid_lite_loads():
    m = load_model(character_path("humanoid_lite"))
    assert m.n_links == 13
    assert not m.planar
    assert len(m.actuated_dof_indices) == 21


def _models_equivalent(a, b):
    assert [ln.name for ln in a.links] == [ln.name for ln in b.links]
    assert [jm.name for jm in a.joints] == [jm.name for jm in b.joints]
    assert a.tracked_links == b.tracked_links
    assert a.actuated_joints == b.actuated_joints
    assert a.planar == b.planar
    for f in ("mass", "com", "inertia_com", "anchor_parent", "jaxis", "jtype", "parent",
              "kp", "kd", "tau_max", "limit_lo", "limit_hi", "sphere_pos", "sphere_radius",
              "sphere_link", "contact_kn", "contact_kd", "friction_mu", "ground_height"):
        assert np.allclose(getattr(a.arrays, f), getattr(b.arrays, f), atol=1e-12), f


def test_write_load_round_trip(tmp_path):
    for build in (build_walker2d, build_humanoid_lite):
        m = build()
        path = tmp_path / f"{m.name}.yaml"
        write_model(m, path)
        _models_equivalent(m, load_model(path))


def test_shipped_assets_match_builders():
    # regeneration guard: the YAML in assets/ is generated from the builders
    _models_equivalent(build_walker2d(), load_model(character_path("walker2d")))
    _models_equivalent(build_humanoid_lite(), load_model(character_path("humanoid_lite")))


def test_with_actuated_gains_replaces_only_actuated():
    m = build_walker2d()
    out = with_actuated_gains(m, 30.0, 100.0)
    for j, jm in enumerate(out.joints):
        want = (30.0, 100.0) if j in out.actuated_joints else \
            (m.joints[j].stiffness, m.joints[j].damping)
        assert (jm.stiffness, jm.damping) == want
        sl = out.arrays.dof_off[j]
        assert out.arrays.kp[sl] == want[0] and out.arrays.kd[sl] == want[1]
    # the input model is untouched
    assert m.joints[m.actuated_joints[0]].stiffness == 300.0
    # everything but the gain arrays is carried over
    for f in ("mass", "com", "jaxis", "tau_max", "limit_lo", "limit_hi"):
        assert np.allclose(getattr(m.arrays, f), getattr(out.arrays, f))
    assert out.tracked_links == m.tracked_links


def test_with_actuated_gains_rejects_negative():
    with pytest.raises(ModelValidationError):
        with_actuated_gains(build_walker2d(), -1.0, 10.0)


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("links: [\n")
    with pytest.raises(ModelFileError, match="parse error"):
        load_model(p)


def test_missing_field_named():
    with pytest.raises(ModelFileError, match="missing field 'joints'"):
        model_from_dict({"format_version": 1, "links": [], "root": "a", "tracked_links": ["a"]})


def test_unsupported_version():
    with pytest.raises(ModelFileError, match="format_version"):
        model_from_dict({"format_version": 99})


def test_capsule_density_link_matches_direct():
    doc = {
        "format_version": 1,
        "name": "stick",
        "root": "a",
        "tracked_links": ["a", "b"],
        "links": [
            {"name": "a", "capsule": {"p0": [0, -0.2, 0], "p1": [0, 0.2, 0], "radius": 0.05},
             "density": 800.0},
            {"name": "b", "mass": 1.0, "com_offset": [0, 0, 0],
             "rot_inertia": (0.01 * np.eye(3)).tolist()},
        ],
        "joints": [{
            "name": "j", "kind": "hinge", "parent": "a", "child": "b",
            "parent_anchor": [0, -0.2, 0], "child_anchor": [0, 0.1, 0],
            "axis": [0, 0, 1], "limits": [[-1, 1]],
        }],
    }
    m = model_from_dict(doc)
    si = capsule_inertia([0, -0.2, 0], [0, 0.2, 0], 0.05, density=800.0)
    assert np.isclose(m.arrays.mass[0], si.mass)
    assert np.allclose(m.links[0].inertia.rot_inertia, si.rot_inertia)


# ---------------------------------------------------------------- validation


def test_cycle_detected():
    links = [_link("a"), _link("b"), _link("c")]
    joints = [_joint("j1", "a", "b"), _joint("j2", "b", "c"), _joint("j3", "c", "a")]
    with pytest.raises(ModelValidationError, match="cycle detected"):
        make_model("m", links, joints, root="a", tracked_links=["a"])


def test_detached_cycle_detected():
    links = [_link("a"), _link("b"), _link("c")]
    joints = [_joint("j1", "b", "c"), _joint("j2", "c", "b")]
    with pytest.raises(ModelValidationError, match="cycle detected"):
        make_model("m", links, joints, root="a", tracked_links=["a"])


def test_two_parents_rejected():
    links = [_link("a"), _link("b"), _link("c")]
    joints = [_joint("j1", "a", "b"), _joint("j2", "a", "c"), _joint("j3", "b", "c")]
    with pytest.raises(ModelValidationError, match="multiple joints"):
        make_model("m", links, joints, root="a", tracked_links=["a"])


def test_disconnected_link_rejected():
    links = [_link("a"), _link("b"), _link("c")]
    joints = [_joint("j1", "a", "b")]
    with pytest.raises(ModelValidationError, match="not connected"):
        make_model("m", links, joints, root="a", tracked_links=["a"])


def test_duplicate_names_rejected():
    with pytest.raises(ModelValidationError, match="duplicate link name"):
        make_model("m", [_link("a"), _link("a")], [_joint("j", "a", "a")],
                   root="a", tracked_links=["a"])


def test_empty_tracked_rejected():
    links = [_link("a"), _link("b")]
    with pytest.raises(ModelValidationError, match="tracked_links"):
        make_model("m", links, [_joint("j", "a", "b")], root="a", tracked_links=[])


def test_canonical_order_from_shuffled_input():
    # author order scrambled relative to the tree; model must still build
    links = [_link("c"), _link("a"), _link("b")]
    joints = [_joint("jbc", "b", "c"), _joint("jab", "a", "b")]
    m = make_model("m", links, joints, root="a", tracked_links=["c"])
    assert [ln.name for ln in m.links] == ["a", "b", "c"]
    assert [jm.name for jm in m.joints] == ["jab", "jbc"]
    assert m.tracked_links == [2]


# ---------------------------------------------------------------- inertia


def test_capsule_degenerates_to_sphere():
    si = capsule_inertia([0.1, 0.2, 0.3], [0.1, 0.2, 0.3], 0.05, density=1000.0)
    m = 1000.0 * 4.0 / 3.0 * np.pi * 0.05**3
    assert np.isclose(si.mass, m, rtol=1e-12)
    assert np.allclose(si.rot_inertia, 0.4 * m * 0.05**2 * np.eye(3), rtol=1e-12)
    assert np.allclose(si.com_offset, [0.1, 0.2, 0.3])


def test_capsule_mass_target():
    si = capsule_inertia([0, 0, 0], [0, 0.4, 0], 0.06, mass=2.5)
    assert np.isclose(si.mass, 2.5, rtol=1e-12)


def test_capsule_inertia_against_grid_integral():
    r, length, rho = 0.08, 0.3, 1000.0
    si = capsule_inertia([0, 0, 0], [0, 0, length], r, density=rho)
    n = 140
    xs = np.linspace(-r, r, n)
    zs = np.linspace(-r, length + r, int(n * (length + 2 * r) / (2 * r)))
    dv = (xs[1] - xs[0]) ** 2 * (zs[1] - zs[0])
    X, Y, Z = np.meshgrid(xs, xs, zs, indexing="ij")
    zc = np.clip(Z, 0.0, length)  # nearest point on the axis segment
    inside = X**2 + Y**2 + (Z - zc) ** 2 <= r * r
    w = inside * rho * dv
    mass = w.sum()
    com = np.array([(w * X).sum(), (w * Y).sum(), (w * Z).sum()]) / mass
    dx, dy, dz = X - com[0], Y - com[1], Z - com[2]
    ixx = (w * (dy**2 + dz**2)).sum()
    izz = (w * (dx**2 + dy**2)).sum()
    assert abs(mass - si.mass) / si.mass < 3e-3
    assert np.allclose(com, si.com_offset, atol=1e-4)
    assert abs(ixx - si.rot_inertia[0, 0]) / si.rot_inertia[0, 0] < 5e-3
    assert abs(izz - si.rot_inertia[2, 2]) / si.rot_inertia[2, 2] < 5e-3


def test_capsule_oblique_axis_spectrum():
    u = np.array([1.0, 2.0, -0.5])
    u /= np.linalg.norm(u)
    c = np.array([0.3, -0.1, 0.2])
    si = capsule_inertia(c - 0.15 * u, c + 0.15 * u, 0.04, density=500.0)
    ref = capsule_inertia([0, 0, -0.15], [0, 0, 0.15], 0.04, density=500.0)
    assert np.allclose(np.sort(np.linalg.eigvalsh(si.rot_inertia)),
                       np.sort(np.diag(ref.rot_inertia)), rtol=1e-10)
    # the capsule axis is a principal axis with the axial moment
    assert np.allclose(si.rot_inertia @ u, ref.rot_inertia[2, 2] * u, rtol=1e-10)
    assert np.allclose(si.com_offset, c)


# ---------------------------------------------------------------- kinematics


def test_fk_zero_pose_is_rest_composed_with_root():
    m = build_humanoid_lite()
    q = np.zeros(m.dof)
    rest_pos, rest_quat = forward_kinematics(m, (np.zeros(3), np.array([1.0, 0, 0, 0])), q)
    root_p = np.array([0.3, 1.1, -0.2])
    root_q = quat_from_rotvec(np.array([0.3, 0.8, -0.4]))
    pos, quat = forward_kinematics(m, (root_p, root_q), q)
    for i in range(m.n_links):
        assert np.allclose(pos[i], root_p + quat_rotate(root_q, rest_pos[i]), atol=1e-12)
        assert quat_geodesic_angle(quat[i], quat_mul(root_q, rest_quat[i])) < 1e-7


def test_fk_hinge_pi_flips_child():
    m = build_walker2d()
    j = m.joint_index("right_hip")
    child = m.joints[j].child_link
    parent = m.joints[j].parent_link
    q = np.zeros(m.dof)
    q[m.arrays.dof_off[j]] = np.pi
    pos, quat = forward_kinematics(m, (np.zeros(3), np.array([1.0, 0, 0, 0])), q)
    axis = m.arrays.jaxis[j]
    expect = quat_mul(quat[parent], quat_from_rotvec(np.pi * axis))
    assert quat_geodesic_angle(quat[child], expect) < 1e-7
    # the anchor point itself does not move
    pos0, _ = forward_kinematics(m, (np.zeros(3), np.array([1.0, 0, 0, 0])), np.zeros(m.dof))
    assert np.allclose(pos[child], pos0[child], atol=1e-12)


def test_fk_inverse_round_trip():
    rng = np.random.default_rng(11)
    for m in (build_walker2d(), build_humanoid_lite()):
        for _ in range(20):
            q = rng.uniform(-0.9, 0.9, size=m.dof)
            root_q = quat_from_rotvec(rng.normal(size=3))
            _, quats = forward_kinematics(m, (rng.normal(size=3), root_q), q)
            q2 = joint_rotations_from_poses(m, quats)
            assert np.allclose(q2, q, atol=1e-9)


def test_fk_rigid_inter_anchor_distances():
    m = build_humanoid_lite()
    rng = np.random.default_rng(12)
    # distance from each link origin to its outbound joint anchors is fixed
    ref = None
    for _ in range(10):
        q = rng.uniform(-1.0, 1.0, size=m.dof)
        pos, quat = forward_kinematics(m, (rng.normal(size=3), quat_from_rotvec(rng.normal(size=3))), q)
        dists = []
        for j, jm in enumerate(m.joints):
            anchor_w = pos[jm.parent_link] + quat_rotate(quat[jm.parent_link], m.arrays.anchor_parent[j])
            dists.append(np.linalg.norm(anchor_w - pos[jm.parent_link]))
            # child frame sits exactly at the joint anchor
            assert np.allclose(anchor_w, pos[jm.child_link], atol=1e-12)
        dists = np.array(dists)
        if ref is None:
            ref = dists
        assert np.allclose(dists, ref, atol=1e-12)


def test_fk_matches_dynamics_kernels():
    from charsim.dynamics.kernels import fk_world
    from charsim.rotation import quat_to_mat

    m = build_humanoid_lite()
    rng = np.random.default_rng(13)
    a = m.arrays
    for _ in range(5):
        q = rng.uniform(-1.2, 1.2, size=m.dof)
        rp = rng.normal(size=3)
        rq = quat_from_rotvec(rng.normal(size=3))
        R, p = fk_world(a.parent, a.jtype, a.jaxis, a.dof_off, a.anchor_parent, rp, rq, q)
        pos, quat = forward_kinematics(m, (rp, rq), q)
        assert np.allclose(p, pos, atol=1e-12)
        for i in range(m.n_links):
            assert np.allclose(quat_to_mat(quat[i]), R[i], atol=1e-12)


def test_reference_pose_matches_engine_quantities():
    m = build_walker2d()
    rng = np.random.default_rng(14)
    q = rng.uniform(-0.5, 0.5, size=m.dof)
    qd = rng.normal(size=m.dof)
    st = ArticulationState(
        root_position=np.array([0.1, 1.0, 0.0]),
        root_orientation=quat_from_rotvec(np.array([0.0, 0.0, 0.4])),
        root_lin_vel=rng.normal(size=3),
        root_ang_vel=rng.normal(size=3),
        joint_q=q.copy(),
        joint_qd=qd.copy(),
    )
    pose = reference_pose(m, st.root_position, st.root_orientation, q, qd,
                          st.root_lin_vel, st.root_ang_vel)
    cpos, cvel = center_of_mass(m, st)
    assert np.allclose(pose.com_position, cpos, atol=1e-12)
    assert np.allclose(pose.com_velocity, cvel, atol=1e-12)
    assert np.allclose(pose.angular_momentum, angular_momentum(m, st), atol=1e-10)
    _, p, omega, vel = link_kinematics(m, st)
    assert np.allclose(pose.link_positions, p, atol=1e-12)
    assert np.allclose(pose.link_ang_vel, omega, atol=1e-12)
    assert np.allclose(pose.link_lin_vel, vel, atol=1e-12)


def test_standing_root_height_touches_ground():
    for m in (build_walker2d(), build_humanoid_lite()):
        h = standing_root_height(m)
        pos, quat = forward_kinematics(m, (np.array([0.0, h, 0.0]), np.array([1.0, 0, 0, 0])),
                                       np.zeros(m.dof))
        a = m.arrays
        low = min(
            pos[a.sphere_link[k]][1] + quat_rotate(quat[a.sphere_link[k]], a.sphere_pos[k])[1]
            - a.sphere_radius[k]
            for k in range(a.n_spheres)
        )
        assert abs(low - a.ground_height) < 1e-12


def test_fk_wrong_dof_count():
    m = build_walker2d()
    with pytest.raises(ValueError, match="DOF"):
        forward_kinematics(m, (np.zeros(3), np.array([1.0, 0, 0, 0])), np.zeros(m.dof + 1))


def test_bundled_characters_stand_without_diverging():
    from charsim.dynamics import step

    # zero targets over 2 s; the planar walker holds upright (it may creep
    # on its asymmetric feet), the 3D humanoid tips over uncontrolled but
    # must come to rest on the ground instead of diverging or tunneling
    floors = {"walker2d": 0.8, "humanoid_lite": 0.05}
    speed_caps = {"walker2d": 2.0, "humanoid_lite": 0.5}
    for build in (build_walker2d, build_humanoid_lite):
        m = build()
        st = ArticulationState.zeros(m.dof)
        st.root_position[1] = standing_root_height(m)
        for _ in range(120):
            st = step(m, st, np.zeros(m.dof))
        assert st.is_finite()
        assert st.root_position[1] > floors[m.name]
        assert np.abs(st.joint_qd).max() < 5.0
        assert np.abs(st.root_lin_vel).max() < speed_caps[m.name]
