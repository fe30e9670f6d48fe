"""The environment loop: one control step of act-simulate-track-reward."""

import numpy as np

from charsim.character.model import CharacterModel, ReferencePose
from charsim.dynamics.engine import step as dynamics_step
from charsim.dynamics.types import (
    CONTROL_DT,
    ArticulationState,
    NonFiniteInputError,
    SimulationDivergedError,
)
from charsim.motion.blend import BlendController
from charsim.motion.clip import MotionClip, advance_phase
from charsim.motion.commands import CommandStream, ControlInput
from charsim.motion.sampling import ClipSampler
from charsim.motion.teleport import teleport_delta, teleport_reference

from .actions import ActionMode, action_dim, apply_action, expand_joint_gains
from .episode import (
    EpisodeConfig,
    StepVerdict,
    check_termination,
    fall_link_index,
    link_com_height,
    reference_link_com_height,
)
from .observe import (
    MIMIC,
    USER_INPUT,
    build_observation,
    observation_layout,
    _state_features,
)
from .reward import RewardBreakdown, TERM_FLOOR, effective_weights, reward_from_features


def _state_from_reference(ref: ReferencePose) -> ArticulationState:
    return ArticulationState(
        root_position=ref.root_position.copy(),
        root_orientation=ref.root_orientation.copy(),
        root_lin_vel=ref.root_lin_vel.copy(),
        root_ang_vel=ref.root_ang_vel.copy(),
        joint_q=ref.joint_rotations.copy(),
        joint_qd=ref.joint_velocities.copy(),
    )


class CharEnv:
    """One character tracking one clip (mimic) or a steered blend (user_input).

    Owns its state, phase/controller bookkeeping, and rng; step() runs one
    control period (1/60 s) end to end.
    """

    def __init__(self, model: CharacterModel, clip: MotionClip = None,
                 idle: MotionClip = None, run: MotionClip = None,
                 config: EpisodeConfig = None,
                 action_mode: ActionMode = ActionMode.TARGETS_ONLY,
                 reward_weights=None, reward_scales=None,
                 angmom_reward: bool = True, angmom_obs: bool = True,
                 seed: int = None):
        self.model = model
        self.config = (config or EpisodeConfig()).validate()
        self.task = self.config.task
        if self.task == MIMIC:
            if clip is None:
                raise ValueError("mimic task needs a clip")
            self.clip = clip
            self.sampler = ClipSampler(model, clip)
            self.controller = None
        else:
            if idle is None or run is None:
                raise ValueError("user_input task needs idle and run clips")
            self.clip = idle
            self.controller = BlendController(model, idle, run)
        self.action_mode = action_mode
        self.action_dim = action_dim(model, action_mode)
        self.reward_weights = effective_weights(reward_weights, angmom_reward)
        self.reward_scales = reward_scales
        self.angmom_reward = angmom_reward
        self.angmom_obs = angmom_obs
        self.layout = observation_layout(self.task, model, angmom_obs)
        self.fall_link = fall_link_index(model, self.config)
        self.rng = np.random.default_rng(seed)

        self.state = None
        self.reference = None
        self.phase = 0.0
        self.control = ControlInput()
        self.steps = 0
        self._cycles = 0.0
        self._origin = np.zeros(3)
        self._stream = None
        # anything with .current and .step(dt) -> ControlInput; replaces the
        # random CommandStream when set (live steering)
        self.command_source = None

    # ------------------------------------------------------------- reset

    def reset(self, rng=None) -> np.ndarray:
        rng = rng or self.rng
        phase = float(rng.uniform()) if self.config.reference_state_init else 0.0
        self.steps = 0
        self._cycles = 0.0
        self._origin = np.zeros(3)
        if self.task == MIMIC:
            self.phase = phase
            self.reference = self.sampler.sample(phase)
            self.control = ControlInput()
        else:
            self._stream = self.command_source or CommandStream(
                rng, self.config.direction_range, self.config.power_range,
                self.config.command_hold_time)
            self.control = self._stream.current
            self.controller.reset(phase=phase)
            self.reference = self.controller.step(self.control, 0.0)
            self.phase = self.controller.phase
        self.state = _state_from_reference(self.reference)
        return self._observe()

    # -------------------------------------------------------------- step

    def step(self, action):
        if self.state is None:
            raise RuntimeError("reset() must run before step()")
        targets, kp_j, kd_j = apply_action(action, self.action_mode, self.model)
        kp, kd = expand_joint_gains(self.model, kp_j, kd_j)
        try:
            self.state = dynamics_step(self.model, self.state, targets, (kp, kd))
        except (SimulationDivergedError, NonFiniteInputError):
            return self._diverged()
        self.steps += 1

        finished = False
        if self.task == MIMIC:
            prev = self.phase
            self.phase, finished = advance_phase(self.phase, CONTROL_DT, self.clip)
            if self.clip.looping and self.phase < prev:
                self._cycles += 1.0
            self.reference = self.sampler.sample(self.phase, self._cycles, self._origin)
        else:
            self.control = self._stream.step(CONTROL_DT)
            self.reference = self.controller.step(self.control, CONTROL_DT)
            self.phase = self.controller.phase

        features = _state_features(self.model, self.state)
        breakdown = reward_from_features(
            self.model, features, self.reference, self.reward_weights,
            self.reward_scales, self.angmom_reward)

        R, p = features[0], features[1]
        com = features[4]
        fall_h = link_com_height(self.model, self.fall_link, R, p)
        ref_fall_h = reference_link_com_height(self.model, self.fall_link, self.reference)
        verdict = check_termination(
            breakdown.total, fall_h, ref_fall_h, self.steps, finished, self.config)

        teleported = False
        if verdict.kind == "teleport":
            delta = teleport_delta(self.reference, com)
            self.reference = teleport_reference(self.reference, com)
            self.controller.anchor[0] += delta[0]
            self.controller.anchor[2] += delta[2]
            teleported = True

        done = verdict.kind == "reset"
        obs = self._observe(features)
        info = {"reason": verdict.reason, "phase": self.phase,
                "teleported": teleported, "fall_height": fall_h,
                "reference_fall_height": ref_fall_h}
        return obs, breakdown, done, info

    # ----------------------------------------------------------- helpers

    def _observe(self, features=None) -> np.ndarray:
        return build_observation(
            self.task, self.model, self.state, self.reference, self.phase,
            self.control, self.angmom_obs, self.layout, features)

    def _diverged(self):
        breakdown = RewardBreakdown(TERM_FLOOR, TERM_FLOOR, TERM_FLOOR, TERM_FLOOR,
                                    self.reward_weights.copy())
        obs = np.zeros(self.layout.total)
        info = {"reason": "diverged", "phase": self.phase, "teleported": False}
        self.state = None  # forces a reset before the next step
        return obs, breakdown, True, info


def reset_episode(env: CharEnv, rng=None) -> np.ndarray:
    return env.reset(rng)


def env_step(env: CharEnv, action):
    return env.step(action)


class VecEnv:
    """Deterministic index-ordered batch of environments with auto-reset."""

    def __init__(self, envs):
        if not envs:
            raise ValueError("need at least one environment")
        if len({e.layout.total for e in envs}) != 1 or \
                len({e.action_dim for e in envs}) != 1:
            raise ValueError("all environments must share observation and action dims")
        self.envs = envs
        self.obs_dim = envs[0].layout.total
        self.action_dim = envs[0].action_dim

    @classmethod
    def from_factory(cls, factory, n: int, base_seed: int = 0):
        return cls([factory(base_seed + i) for i in range(n)])

    def __len__(self):
        return len(self.envs)

    def reset_all(self) -> np.ndarray:
        return np.stack([e.reset() for e in self.envs])

    def step_all(self, actions):
        actions = np.asarray(actions, dtype=float)
        if actions.shape != (len(self.envs), self.action_dim):
            raise ValueError(
                f"actions must have shape {(len(self.envs), self.action_dim)}, "
                f"got {actions.shape}")
        obs = np.empty((len(self.envs), self.obs_dim))
        totals = np.empty(len(self.envs))
        dones = np.zeros(len(self.envs), dtype=bool)
        infos = []
        for i, env in enumerate(self.envs):
            o, breakdown, done, info = env.step(actions[i])
            totals[i] = breakdown.total
            info["breakdown"] = breakdown
            if done:
                info["terminal_observation"] = o
                o = env.reset()
            obs[i] = o
            dones[i] = done
            infos.append(info)
        return obs, totals, dones, infos
