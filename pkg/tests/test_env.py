"""Observation layout, action mapping, reward, termination, env stepping."""

import numpy as np
import pytest

from charsim.character import load_model, reference_pose, with_actuated_gains
from charsim.dynamics.types import ArticulationState
from charsim.env import (
    ActionMode,
    CharEnv,
    EpisodeConfig,
    MIMIC,
    USER_INPUT,
    VecEnv,
    action_dim,
    apply_action,
    build_observation,
    check_termination,
    compute_reward,
    effective_weights,
    observation_layout,
)
from charsim.motion import ControlInput, load_clip, sample_clip
from charsim.resources import character_path, clip_path
from charsim.rotation import quat_from_rotvec, quat_mul, quat_rotate, yaw_quat


@pytest.fixture(scope="module")
def walker():
    return load_model(character_path("walker2d"))


@pytest.fixture(scope="module")
def humanoid():
    return load_model(character_path("humanoid_lite"))


def _clip(name, character="walker2d"):
    return load_clip(clip_path(character, name))


def _posed_state(ref):
    return ArticulationState(
        root_position=ref.root_position.copy(),
        root_orientation=ref.root_orientation.copy(),
        root_lin_vel=ref.root_lin_vel.copy(),
        root_ang_vel=ref.root_ang_vel.copy(),
        joint_q=ref.joint_rotations.copy(),
        joint_qd=ref.joint_velocities.copy(),
    )


def _transformed_pose(model, ref, yaw=0.0, offset=(0.0, 0.0, 0.0)):
    """Same reference rigidly yawed about +y then translated."""
    qy = yaw_quat(yaw)
    return reference_pose(
        model,
        quat_rotate(qy, ref.root_position) + np.asarray(offset),
        quat_mul(qy, ref.root_orientation),
        ref.joint_rotations,
        ref.joint_velocities,
        quat_rotate(qy, ref.root_lin_vel),
        quat_rotate(qy, ref.root_ang_vel),
    )


def _transformed_state(st, yaw=0.0, offset=(0.0, 0.0, 0.0)):
    qy = yaw_quat(yaw)
    return ArticulationState(
        root_position=quat_rotate(qy, st.root_position) + np.asarray(offset),
        root_orientation=quat_mul(qy, st.root_orientation),
        root_lin_vel=quat_rotate(qy, st.root_lin_vel),
        root_ang_vel=quat_rotate(qy, st.root_ang_vel),
        joint_q=st.joint_q.copy(),
        joint_qd=st.joint_qd.copy(),
    )


# ---------------------------------------------------------------- layout


def test_layout_arithmetic(walker, humanoid):
    for model in (walker, humanoid):
        d = model.arrays.nd
        t = len(model.tracked_links)
        for ang in (True, False):
            base = 2 * d + 9 * t + 6 + (3 if ang else 0)
            assert observation_layout(MIMIC, model, ang).total == 1 + base
            assert observation_layout(USER_INPUT, model, ang).total == 2 * base + 2
    assert observation_layout(MIMIC, walker).total == 85
    assert observation_layout(MIMIC, humanoid).total == 117


def test_layout_matches_built_vector(walker, humanoid):
    for model, clip_name in ((walker, "walk"), (humanoid, "run")):
        ref = sample_clip(model, _clip(clip_name, model.name), 0.3)
        st = _posed_state(ref)
        for task in (MIMIC, USER_INPUT):
            for ang in (True, False):
                lay = observation_layout(task, model, ang)
                obs = build_observation(task, model, st, ref, 0.3, ControlInput(), ang)
                assert obs.shape == (lay.total,)
                assert np.isfinite(obs).all()


def test_layout_describe(walker):
    text = observation_layout(USER_INPUT, walker).describe()
    for name in ("diff_com_position", "control_input", "link_rotations"):
        assert name in text


def test_diff_segments_zero_on_self(walker):
    ref = sample_clip(walker, _clip("walk"), 0.42)
    st = _posed_state(ref)
    lay = observation_layout(USER_INPUT, walker)
    obs = build_observation(USER_INPUT, walker, st, ref, 0.42, ControlInput())
    sl = lay.slices()
    for name in ("diff_joint_positions", "diff_joint_velocities",
                 "diff_link_ang_vel", "diff_com_position", "diff_com_velocity",
                 "diff_angular_momentum"):
        assert not obs[sl[name]].any(), name
    # orientation diff pays one quaternion round trip, nothing more
    assert np.abs(obs[sl["diff_link_rotations"]]).max() < 1e-14


def test_translation_invariance(walker):
    ref = sample_clip(walker, _clip("walk"), 0.2)
    st = _posed_state(sample_clip(walker, _clip("walk"), 0.23))
    off = (3.2, 1.7, -2.1)
    for task in (MIMIC, USER_INPUT):
        a = build_observation(task, walker, st, ref, 0.2, ControlInput(0.1, 0.4))
        b = build_observation(task, walker, _transformed_state(st, offset=off),
                              _transformed_pose(walker, ref, offset=off),
                              0.2, ControlInput(0.1, 0.4))
        assert np.allclose(a, b, atol=1e-9)


def test_heading_frame_invariance(humanoid):
    clip = _clip("run", "humanoid_lite")
    ref = sample_clip(humanoid, clip, 0.6)
    st = _posed_state(sample_clip(humanoid, clip, 0.64))
    st.joint_qd += 0.05
    alpha = 0.9
    for task in (MIMIC, USER_INPUT):
        a = build_observation(task, humanoid, st, ref, 0.6, ControlInput(0.2, 0.7))
        b = build_observation(task, humanoid, _transformed_state(st, yaw=alpha),
                              _transformed_pose(humanoid, ref, yaw=alpha),
                              0.6, ControlInput(0.2 + alpha, 0.7))
        assert np.allclose(a, b, atol=1e-9)
    ra = compute_reward(humanoid, st, ref)
    rb = compute_reward(humanoid, _transformed_state(st, yaw=alpha),
                        _transformed_pose(humanoid, ref, yaw=alpha))
    assert abs(ra.total - rb.total) < 1e-9


# ---------------------------------------------------------------- actions


def test_action_dims(walker, humanoid):
    assert action_dim(walker, ActionMode.TARGETS_ONLY) == 4
    assert action_dim(humanoid, ActionMode.TARGETS_ONLY) == 21
    assert action_dim(humanoid, ActionMode.TARGETS_PLUS_BOTH_DELTAS) == 43
    assert action_dim(walker, ActionMode.TARGETS_TIMES_MULTIPLIERS) == 8


def test_zero_action_targets_only(walker):
    targets, kp, kd = apply_action(np.zeros(4), ActionMode.TARGETS_ONLY, walker)
    a = walker.arrays
    for d in walker.actuated_dof_indices:
        assert abs(targets[d] - 0.5 * (a.limit_lo[d] + a.limit_hi[d])) < 1e-12
    for j in walker.actuated_joints:
        assert kp[j] == 300.0
        assert kd[j] == 30.0
    ankle = walker.joint_index("right_ankle")
    assert targets[a.dof_off[ankle]] == 0.0
    assert kp[ankle] == 10.0 and kd[ankle] == 1.0


def test_zero_extras_match_targets_only(walker):
    base = apply_action(np.zeros(4), ActionMode.TARGETS_ONLY, walker)
    for mode in (ActionMode.TARGETS_PLUS_STIFFNESS_DELTA,
                 ActionMode.TARGETS_PLUS_DAMPING_DELTA,
                 ActionMode.TARGETS_PLUS_BOTH_DELTAS,
                 ActionMode.TARGETS_TIMES_MULTIPLIERS):
        out = apply_action(np.zeros(action_dim(walker, mode)), mode, walker)
        for x, y in zip(base, out):
            assert np.array_equal(x, y)


def test_delta_and_multiplier_math(walker):
    # on the benchmark 30/100 initialization the delta scales span [0, 2x]
    walker = with_actuated_gains(walker, 30.0, 100.0)
    nj_act = len(walker.actuated_joints)
    act = np.concatenate([np.zeros(4), np.full(2 * nj_act, 1.0)])
    _, kp, kd = apply_action(act, ActionMode.TARGETS_PLUS_BOTH_DELTAS, walker)
    for j in walker.actuated_joints:
        assert kp[j] == 60.0
        assert kd[j] == 200.0
    act = np.concatenate([np.zeros(4), np.full(2 * nj_act, -1.0)])
    _, kp, kd = apply_action(act, ActionMode.TARGETS_PLUS_BOTH_DELTAS, walker)
    for j in walker.actuated_joints:
        assert kp[j] == 0.0
        assert kd[j] == 0.0
    act = np.concatenate([np.zeros(4), np.full(nj_act, -1.0)])
    _, kp, kd = apply_action(act, ActionMode.TARGETS_TIMES_MULTIPLIERS, walker)
    for j in walker.actuated_joints:
        assert kp[j] == 0.0
        assert kd[j] == 0.0


def test_wrong_action_length(walker):
    with pytest.raises(ValueError, match="channels"):
        apply_action(np.zeros(5), ActionMode.TARGETS_ONLY, walker)


# ---------------------------------------------------------------- reward


def test_reward_fixed_point(walker):
    ref = sample_clip(walker, _clip("run"), 0.55)
    rb = compute_reward(walker, _posed_state(ref), ref)
    for term in (rb.pose_term, rb.velocity_term, rb.com_term, rb.angmom_term):
        assert abs(term - 1.0) < 1e-12
    assert abs(rb.total - 1.0) < 1e-12


def test_reward_monotone_in_each_error(walker):
    ref = sample_clip(walker, _clip("run"), 0.55)
    st = _posed_state(ref)
    base = compute_reward(walker, st, ref).total

    worse = _posed_state(ref)
    worse.root_position[0] += 0.1  # com error only grows
    assert compute_reward(walker, worse, ref).total < base

    worse = _posed_state(ref)
    worse.joint_qd[:] += 1.0
    assert compute_reward(walker, worse, ref).total < base

    worse = _posed_state(ref)
    worse.root_orientation = quat_mul(
        quat_from_rotvec(np.array([0.0, 0.0, 0.3])), worse.root_orientation)
    assert compute_reward(walker, worse, ref).total < base


def test_reward_terms_in_unit_interval(walker):
    rng = np.random.default_rng(11)
    ref = sample_clip(walker, _clip("walk"), 0.1)
    for _ in range(20):
        st = _posed_state(ref)
        st.root_position += rng.normal(scale=2.0, size=3)
        st.joint_q += rng.normal(scale=1.0, size=st.joint_q.shape)
        st.joint_qd += rng.normal(scale=20.0, size=st.joint_qd.shape)
        rb = compute_reward(walker, st, ref)
        for term in (rb.pose_term, rb.velocity_term, rb.com_term, rb.angmom_term):
            assert 0.0 < term <= 1.0
        assert 0.0 < rb.total <= 1.0


def test_weight_redistribution():
    w = effective_weights()
    assert np.allclose(w, [0.55, 0.15, 0.20, 0.10], atol=1e-15)
    w = effective_weights(angmom_enabled=False)
    assert np.allclose(w[:3], [0.55, 0.15, 0.20] / np.float64(0.9), atol=1e-9)
    assert np.allclose(w[:3], [0.6111111, 0.1666667, 0.2222222], atol=1e-6)
    assert w[3] == 0.0
    assert abs(w.sum() - 1.0) < 1e-12


# ------------------------------------------------------------ termination


def test_termination_examples():
    mimic = EpisodeConfig(task=MIMIC, early_stop_threshold=0.3).validate()
    assert check_termination(0.9, 1.0, 1.0, 5, False, mimic).kind == "continue"
    v = check_termination(0.2, 1.0, 1.0, 5, False, mimic)
    assert v.kind == "reset" and v.reason == "early_stop"

    user = EpisodeConfig(task=USER_INPUT, teleport_enabled=True,
                         teleport_threshold=0.3).validate()
    assert check_termination(0.2, 1.0, 1.0, 5, False, user).kind == "teleport"

    v = check_termination(0.9, 0.5, 1.0, 5, False, mimic)
    assert v.kind == "reset" and v.reason == "fall"
    v = check_termination(0.9, 1.0, 1.0, 600, False, mimic)
    assert v.kind == "reset" and v.reason == "max_steps"
    v = check_termination(0.9, 1.0, 1.0, 5, True, mimic)
    assert v.kind == "reset" and v.reason == "clip_end"


def test_config_validation():
    with pytest.raises(ValueError, match="teleport"):
        EpisodeConfig(task=MIMIC, teleport_enabled=True).validate()
    with pytest.raises(ValueError, match="early_stop"):
        EpisodeConfig(early_stop_threshold=1.0).validate()
    with pytest.raises(ValueError, match="task"):
        EpisodeConfig(task="dance").validate()


# ---------------------------------------------------------------- env


def test_reset_phase_behavior(walker):
    env = CharEnv(walker, clip=_clip("walk"), seed=0)
    for _ in range(3):
        env.reset()
        assert env.phase == 0.0

    cfg = EpisodeConfig(reference_state_init=True)
    a = CharEnv(walker, clip=_clip("walk"), config=cfg, seed=9)
    b = CharEnv(walker, clip=_clip("walk"), config=cfg, seed=9)
    pa = [a.reset() is not None and a.phase for _ in range(4)]
    pb = [b.reset() is not None and b.phase for _ in range(4)]
    assert pa == pb
    assert len(set(pa)) > 1


def test_post_reset_reward_is_one(walker):
    for cfg in (EpisodeConfig(),
                EpisodeConfig(reference_state_init=True),
                EpisodeConfig(task=USER_INPUT)):
        env = (CharEnv(walker, clip=_clip("flip"), config=cfg, seed=2)
               if cfg.task == MIMIC else
               CharEnv(walker, idle=_clip("idle"), run=_clip("run"), config=cfg, seed=2))
        env.reset()
        rb = compute_reward(walker, env.state, env.reference,
                            angmom_enabled=env.angmom_reward)
        assert abs(rb.total - 1.0) < 1e-6


def test_zero_policy_survives_ten_steps(walker):
    env = CharEnv(walker, clip=_clip("walk"), seed=0)
    env.reset()
    for _ in range(10):
        obs, rb, done, info = env.step(np.zeros(env.action_dim))
        assert not done
        assert np.isfinite(obs).all()
        assert 0.0 < rb.total <= 1.0


def test_done_matches_verdict_reason(walker):
    env = CharEnv(walker, clip=_clip("walk"),
                  config=EpisodeConfig(max_episode_steps=30, early_stop_threshold=0.0),
                  seed=0)
    env.reset()
    for i in range(30):
        _, _, done, info = env.step(np.zeros(env.action_dim))
        assert done == (info["reason"] != "")
    assert done and info["reason"] == "max_steps" and i == 29


def test_nonlooping_clip_end(walker):
    env = CharEnv(walker, clip=_clip("kick"),
                  config=EpisodeConfig(early_stop_threshold=0.0), seed=0)
    env.reset()
    env.phase = 0.99
    env.state = _posed_state(env.sampler.sample(0.99))
    _, _, done, info = env.step(np.zeros(env.action_dim))
    assert done and info["reason"] == "clip_end"


def test_teleport_event(walker):
    cfg = EpisodeConfig(task=USER_INPUT, teleport_enabled=True, teleport_threshold=0.99)
    env = CharEnv(walker, idle=_clip("idle"), run=_clip("run"), config=cfg, seed=1)
    env.reset()
    obs, rb, done, info = env.step(np.zeros(env.action_dim))
    assert info["teleported"] and not done
    sl = env.layout.slices()["diff_com_position"]
    assert abs(obs[sl][0]) < 1e-9
    assert abs(obs[sl][2]) < 1e-9


def test_diverged_episode(walker):
    env = CharEnv(walker, clip=_clip("walk"), seed=3)
    env.reset()
    env.state.joint_qd[:] = 1e9
    obs, rb, done, info = env.step(np.zeros(env.action_dim))
    assert done and info["reason"] == "diverged"
    assert not obs.any()
    assert 0.0 < rb.total <= 1.0
    with pytest.raises(RuntimeError, match="reset"):
        env.step(np.zeros(env.action_dim))


def test_vec_env_matches_single(walker):
    def factory(seed):
        return CharEnv(walker, clip=_clip("walk"),
                       config=EpisodeConfig(reference_state_init=True,
                                            max_episode_steps=20),
                       seed=seed)

    vec = VecEnv.from_factory(factory, 2, base_seed=7)
    solo = [factory(7), factory(8)]
    obs_v = vec.reset_all()
    obs_s = np.stack([e.reset() for e in solo])
    assert np.array_equal(obs_v, obs_s)

    rng = np.random.default_rng(0)
    for _ in range(30):
        acts = rng.uniform(-0.4, 0.4, size=(2, vec.action_dim))
        obs_v, totals_v, dones_v, infos = vec.step_all(acts)
        rows = []
        for i, e in enumerate(solo):
            o, rb, done, _ = e.step(acts[i])
            if done:
                o = e.reset()
            rows.append((o, rb.total, done))
        assert np.array_equal(obs_v, np.stack([r[0] for r in rows]))
        assert np.array_equal(totals_v, np.array([r[1] for r in rows]))
        assert np.array_equal(dones_v, np.array([r[2] for r in rows]))


def test_random_rollout_stays_finite(walker):
    cfg = EpisodeConfig(task=USER_INPUT, teleport_enabled=True, teleport_threshold=0.2)
    env = CharEnv(walker, idle=_clip("idle"), run=_clip("run"), config=cfg, seed=5)
    rng = np.random.default_rng(6)
    obs = env.reset()
    for _ in range(150):
        obs, rb, done, _ = env.step(rng.uniform(-1.0, 1.0, env.action_dim))
        assert np.isfinite(obs).all()
        if done:
            obs = env.reset()


def test_humanoid_env_smoke(humanoid):
    env = CharEnv(humanoid, clip=_clip("idle", "humanoid_lite"),
                  action_mode=ActionMode.TARGETS_PLUS_BOTH_DELTAS, seed=0)
    obs = env.reset()
    assert obs.shape == (env.layout.total,)
    for _ in range(3):
        obs, rb, done, _ = env.step(np.zeros(env.action_dim))
        assert np.isfinite(obs).all()
        assert 0.0 < rb.total <= 1.0
