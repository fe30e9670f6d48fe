"""Integrator behavior: stepping, contact, conservation, limits, divergence."""

import numpy as np
import pytest

from charsim.dynamics import (
    ArticulationState,
    ContactModel,
    JointModel,
    NonFiniteInputError,
    SimulationDivergedError,
    SpatialInertia,
    angular_momentum,
    build_model_arrays,
    center_of_mass,
    forward_dynamics,
    linear_momentum,
    step,
    total_energy,
    CONTROL_DT,
    PHYSICS_DT,
)
from charsim.dynamics import kernels
from charsim.dynamics.types import HINGE, SPHERICAL
from charsim.rotation import quat_from_rotvec, quat_geodesic_angle, quat_mul

from dynmodels import rand_inertia, rand_model, rand_state, run_raw, single_body


def test_ballistic_height():
    # dt = 1/600 as pinned; semi-implicit Euler biases height by g*t*dt/2,
    # 8.2e-4 m at t = 0.1 s, inside the 1e-3 budget
    m = single_body()
    st = ArticulationState.zeros(0)
    h = 2.0
    st.root_position = np.array([0.0, h, 0.0])
    cur = st
    t = 0.1
    for _ in range(6):
        cur = step(m, cur, np.zeros(0))
    want = h - 0.5 * 9.81 * t * t
    assert abs(cur.root_position[1] - want) < 1e-3


def test_resting_equilibrium():
    mass = 3.0
    contact = ContactModel()
    depth_eq = mass * 9.81 / contact.normal_stiffness
    m = single_body(mass=mass, spheres=[(0, [0.0, 0.0, 0.0], 0.1)], contact=contact)
    st = ArticulationState.zeros(0)
    st.root_position = np.array([0.0, 0.1 - depth_eq, 0.0])
    com0 = center_of_mass(m, st)[0]
    cur = st
    for _ in range(60):
        cur = step(m, cur, np.zeros(0))
        com = center_of_mass(m, cur)[0]
        assert abs(com[1] - com0[1]) < 1e-4
    # a slightly disturbed start settles back to the same height
    st.root_position[1] += 5e-4
    cur = st
    for _ in range(60):
        cur = step(m, cur, np.zeros(0))
    assert abs(center_of_mass(m, cur)[0][1] - com0[1]) < 1e-4


def test_linear_momentum_conservation():
    # zero gravity, no contact, no drives; substep dt shrunk so the
    # first-order integrator meets the 1e-6 budget over a full second
    rng = np.random.default_rng(19)
    for trial in range(3):
        m = rand_model(rng, 4, com_scale=0.05, gravity=np.zeros(3))
        st = rand_state(rng, m, vel_scale=1.0, ang_scale=0.3, q_scale=0.5, qd_scale=0.5)
        p0 = linear_momentum(m, st)
        out = run_raw(m, st, np.zeros(m.nd), PHYSICS_DT / 128.0, 1.0)
        p1 = linear_momentum(m, out)
        assert np.linalg.norm(p1 - p0) / np.linalg.norm(p0) < 1e-6


def test_angular_momentum_conservation_internal_torques():
    # internal PD only: the generalized forces are equal and opposite across
    # each joint, so L about the CoM stays put
    rng = np.random.default_rng(23)
    for trial in range(3):
        m = rand_model(rng, 3, branched=False, stiffness=2.0, damping=0.2,
                       com_scale=0.05, gravity=np.zeros(3))
        st = rand_state(rng, m, vel_scale=1.0, ang_scale=0.0, q_scale=0.5, qd_scale=0.5)
        st.root_ang_vel = rng.uniform(0.4, 0.8, 3) * rng.choice([-1.0, 1.0], 3)
        L0 = angular_momentum(m, st)
        targets = rng.uniform(-0.3, 0.3, m.nd)
        out = run_raw(m, st, targets, PHYSICS_DT / 1024.0, 0.5)
        L1 = angular_momentum(m, out)
        assert np.linalg.norm(L1 - L0) / np.linalg.norm(L0) < 1e-5


def test_energy_never_created():
    rng = np.random.default_rng(31)
    joints = []
    for i in (1, 2):
        ax = rng.normal(size=3)
        ax /= np.linalg.norm(ax)
        joints.append(JointModel(f"j{i}", HINGE, i - 1, i,
                                 np.array([0.0, -0.4, 0.0]), np.zeros(3),
                                 np.array([[-20.0, 20.0]]), 0.0, 0.0, 1e6, ax))
    m = build_model_arrays(
        ["a", "b", "c"], [rand_inertia(rng, 0.05) for _ in range(3)], joints)
    st = ArticulationState.zeros(m.nd)
    st.root_position = np.array([0.0, 3.0, 0.0])
    st.joint_q = np.array([0.8, -0.5])
    st.root_ang_vel = np.array([0.2, 0.1, -0.3])
    e0 = total_energy(m, st)
    cur = st
    for _ in range(60):
        cur = step(m, cur, np.zeros(m.nd))
        assert (total_energy(m, cur) - e0) / abs(e0) < 1e-3


def test_quaternion_norm_over_1e5_substeps():
    rng = np.random.default_rng(5)
    m = rand_model(rng, 3, stiffness=5.0, damping=2.0, max_torque=50.0,
                   com_scale=0.05, gravity=np.zeros(3))
    st = rand_state(rng, m, ang_scale=1.5, qd_scale=1.0)
    cur = st
    for chunk in range(100):
        cur = run_raw(m, cur, np.zeros(m.nd), PHYSICS_DT, 1000 * PHYSICS_DT)
        assert abs(np.linalg.norm(cur.root_orientation) - 1.0) <= 1e-9


def test_determinism_bit_identical():
    rng = np.random.default_rng(8)
    m = rand_model(rng, 4, stiffness=10.0, damping=3.0, max_torque=20.0)
    st = rand_state(rng, m)
    targets = rng.uniform(-0.5, 0.5, m.nd)
    a = step(m, st, targets)
    b = step(m, st, targets)
    assert np.array_equal(a.root_position, b.root_position)
    assert np.array_equal(a.root_orientation, b.root_orientation)
    assert np.array_equal(a.joint_q, b.joint_q)
    assert np.array_equal(a.joint_qd, b.joint_qd)
    # chunking into two control periods matches one double-length call
    c = step(m, step(m, st, targets), targets)
    d = step(m, st, targets, control_dt=2 * CONTROL_DT)
    assert np.array_equal(c.joint_q, d.joint_q)
    assert np.array_equal(c.root_position, d.root_position)


def test_joint_limits_clamped():
    bob = SpatialInertia(1.0, np.array([0.0, -0.3, 0.0]), np.eye(3) * 0.03)
    root = SpatialInertia(1e6, np.zeros(3), np.eye(3) * 1e6)
    j = JointModel("j1", HINGE, 0, 1, np.zeros(3), np.zeros(3),
                   np.array([[-0.5, 0.5]]), 200.0, 5.0, 500.0,
                   np.array([0.0, 0.0, 1.0]))
    m = build_model_arrays(["base", "bob"], [root, bob], [j], gravity=np.zeros(3))
    cur = ArticulationState.zeros(1)
    hit = False
    for _ in range(120):
        cur = step(m, cur, np.array([2.0]))
        assert cur.joint_q[0] <= 0.5 + 1e-12
        if cur.joint_q[0] >= 0.5 - 1e-9:
            hit = True
            assert cur.joint_qd[0] == 0.0
    assert hit


def test_divergence_raises_with_step_index():
    m = single_body()
    st = ArticulationState.zeros(0)
    st.root_position = np.array([0.0, 2e6, 0.0])
    with pytest.raises(SimulationDivergedError) as e:
        step(m, st, np.zeros(0))
    assert e.value.step_index == 0
    st2 = ArticulationState.zeros(0)
    st2.root_lin_vel = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(NonFiniteInputError):
        step(m, st2, np.zeros(0))


def test_torque_clamp_consistent_with_raw_dynamics():
    # the implicit solve with clamping must agree with raw dynamics fed the
    # torques it reports having applied
    rng = np.random.default_rng(13)
    for trial in range(20):
        tmax = rng.uniform(1.0, 8.0)
        m = rand_model(rng, 4, stiffness=30.0, damping=100.0, max_torque=tmax)
        st = rand_state(rng, m)
        targets = rng.uniform(-1.5, 1.5, m.nd)
        tau0 = m.kp * (targets - st.joint_q) - m.kd * st.joint_qd
        kddt = m.kd * PHYSICS_DT
        a0p, qdd, tau_app = kernels.aba_solve(
            m.parent, m.jtype, m.jaxis, m.dof_off, m.anchor_parent, m.ispatial,
            st.root_orientation, st.joint_q, st.joint_qd,
            st.root_lin_vel, st.root_ang_vel,
            tau0, kddt, m.tau_max, True, np.zeros((m.nl, 6)))
        assert np.all(np.abs(tau_app) <= m.tau_max * (1.0 + 1e-9))
        qdd_raw, _ang, _lin = forward_dynamics(m, st, tau_app)
        scale = max(1.0, float(np.max(np.abs(qdd_raw))))
        assert np.max(np.abs(qdd - qdd_raw)) / scale < 1e-10


def test_implicit_pd_stable_at_paper_gains():
    # damping 100 >> stiffness 30 explodes under explicit PD at 1/600; the
    # implicit drive has to stay bounded and land on the target
    bob = SpatialInertia(1.0, np.array([0.0, -0.3, 0.0]), np.eye(3) * 0.03)
    root = SpatialInertia(1e6, np.zeros(3), np.eye(3) * 1e6)
    j = JointModel("j1", HINGE, 0, 1, np.zeros(3), np.zeros(3),
                   np.array([[-3.0, 3.0]]), 30.0, 100.0, 150.0,
                   np.array([0.0, 0.0, 1.0]))
    m = build_model_arrays(["base", "bob"], [root, bob], [j], gravity=np.zeros(3))
    cur = ArticulationState.zeros(1)
    # slow pole is kp/kd = 0.3/s, so reaching the target takes ~20 s
    for _ in range(1200):
        cur = step(m, cur, np.array([1.0]))
        assert abs(cur.joint_qd[0]) < 50.0
    assert abs(cur.joint_q[0] - 1.0) < 1e-2


def test_spherical_exp_map_integration_exact():
    # symmetric child spinning torque-free: omega_local is constant and the
    # sequential body-frame exponential equals the closed-form rotation
    root = SpatialInertia(10.0, np.zeros(3), np.eye(3))
    child = SpatialInertia(1.0, np.zeros(3), np.eye(3) * 0.2)
    j = JointModel("ball", SPHERICAL, 0, 1, np.zeros(3), np.zeros(3),
                   np.tile([-10.0, 10.0], (3, 1)), 0.0, 0.0, 1e6)
    m = build_model_arrays(["base", "child"], [root, child], [j], gravity=np.zeros(3))
    st = ArticulationState.zeros(3)
    w = np.array([1.3, -2.1, 0.7])
    st.joint_qd = w.copy()
    duration = 0.3
    out = run_raw(m, st, np.zeros(3), PHYSICS_DT, duration)
    assert np.max(np.abs(out.joint_qd - w)) < 1e-9
    got = quat_from_rotvec(out.joint_q)
    want = quat_from_rotvec(w * duration)
    assert quat_geodesic_angle(got, want) < 1e-9
    assert np.linalg.norm(out.joint_q) <= np.pi + 1e-12


def test_spherical_exp_map_stays_canonical_over_many_turns():
    root = SpatialInertia(10.0, np.zeros(3), np.eye(3))
    child = SpatialInertia(1.0, np.zeros(3), np.eye(3) * 0.2)
    j = JointModel("ball", SPHERICAL, 0, 1, np.zeros(3), np.zeros(3),
                   np.tile([-10.0, 10.0], (3, 1)), 0.0, 0.0, 1e6)
    m = build_model_arrays(["base", "child"], [root, child], [j], gravity=np.zeros(3))
    st = ArticulationState.zeros(3)
    st.joint_qd = np.array([0.0, 8.0, 0.0])  # ~4 turns over 3 s
    cur = st
    for _ in range(30):
        cur = run_raw(m, cur, np.zeros(3), PHYSICS_DT, 0.1)
        assert np.linalg.norm(cur.joint_q) <= np.pi + 1e-12


def test_com_two_equal_links():
    a = SpatialInertia(2.0, np.zeros(3), np.eye(3) * 1e-4)
    b = SpatialInertia(2.0, np.zeros(3), np.eye(3) * 1e-4)
    j = JointModel("j1", HINGE, 0, 1, np.array([2.0, 0.0, 0.0]), np.zeros(3),
                   np.array([[-3.0, 3.0]]), 0.0, 0.0, 1.0, np.array([0.0, 0.0, 1.0]))
    m = build_model_arrays(["a", "b"], [a, b], [j])
    st = ArticulationState.zeros(1)
    pos, vel = center_of_mass(m, st)
    assert np.allclose(pos, [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(vel, 0.0, atol=1e-12)


def test_com_velocity_matches_finite_difference():
    rng = np.random.default_rng(37)
    for trial in range(5):
        m = rand_model(rng, 4, gravity=np.zeros(3))
        st = rand_state(rng, m, vel_scale=1.0, ang_scale=1.0, qd_scale=1.0)
        _pos0, vel0 = center_of_mass(m, st)
        dt = PHYSICS_DT
        out = run_raw(m, st, np.zeros(m.nd), dt, dt)
        pos1, _vel1 = center_of_mass(m, out)
        pos0, _ = center_of_mass(m, st)
        fd = (pos1 - pos0) / dt
        assert np.max(np.abs(fd - vel0)) < 5e-2


def test_angular_momentum_spinning_body():
    inertia = np.diag([0.2, 0.5, 0.9])
    m = single_body(mass=2.0, inertia=inertia, gravity=np.zeros(3))
    st = ArticulationState.zeros(0)
    st.root_ang_vel = np.array([0.0, 2.0, 0.0])
    L = angular_momentum(m, st)
    assert np.allclose(L, [0.0, 1.0, 0.0], atol=1e-12)
    # rotated body: L = R I R^T w
    rv = np.array([0.3, -0.8, 0.5])
    st.root_orientation = quat_from_rotvec(rv)
    from charsim.rotation import quat_to_mat
    R = quat_to_mat(st.root_orientation)
    w = np.array([1.0, -0.5, 2.0])
    st.root_ang_vel = w
    L = angular_momentum(m, st)
    assert np.allclose(L, R @ inertia @ R.T @ w, atol=1e-12)


def test_all_links_at_rest_zero_momentum():
    rng = np.random.default_rng(41)
    m = rand_model(rng, 4)
    st = ArticulationState.zeros(m.nd)
    st.joint_q = rng.uniform(-1.0, 1.0, m.nd)
    assert np.allclose(angular_momentum(m, st), 0.0, atol=1e-12)
    assert np.allclose(linear_momentum(m, st), 0.0, atol=1e-12)
