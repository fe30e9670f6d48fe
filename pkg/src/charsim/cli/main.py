"""Command-line entry point: train, eval, inspect-obs, replay, serve.

Exit codes: 0 success, 1 runtime failure, 2 config error.  Set CHARSIM_LOG
(debug/info/warning/error) to control log verbosity; debug also prints full
tracebacks on failure.
"""

import argparse
import json
import logging
import os
import signal
import sys
import time
from pathlib import Path

import numpy as np

from charsim.env import ActionMode, action_dim, observation_layout
from charsim.learn import (
    CheckpointError,
    load_checkpoint,
    layout_signature,
    policy_forward,
    sample_pre_squash,
)

from .config import (
    ConfigError,
    RunConfig,
    load_run_config,
    load_assets,
    make_env,
    make_params,
    make_trainer,
)
from .trajectory import make_header, record_episode, save_trajectory

log = logging.getLogger("charsim")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _setup_logging():
    level = os.environ.get("CHARSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


# ----------------------------------------------------------------- train


def cmd_train(args) -> int:
    rc = load_run_config(args.config, args.set)
    trainer = make_trainer(rc)
    (Path(rc.output_dir) / "config.json").write_text(
        json.dumps(rc.to_dict(), indent=2, sort_keys=True) + "\n")

    previous = signal.getsignal(signal.SIGINT)

    def on_interrupt(signum, frame):
        print("interrupted: finishing the current update, writing final checkpoint",
              flush=True)
        trainer.request_stop = True
        # a second interrupt falls through to the default handler
        signal.signal(signal.SIGINT, previous)

    signal.signal(signal.SIGINT, on_interrupt)
    t0 = time.monotonic()

    def progress(row):
        print(f"update {trainer.updates}  step {row['step']}  "
              f"reward {row['mean_reward']:.4f}  "
              f"ep_len {row['mean_episode_length']:.1f}  "
              f"value_loss {row['value_loss']:.4f}", flush=True)

    try:
        steps = trainer.train(callback=progress)
    finally:
        signal.signal(signal.SIGINT, previous)
    dt = time.monotonic() - t0
    print(f"trained {steps} steps in {dt:.1f} s "
          f"({steps / max(dt, 1e-9):.0f} steps/s); output in {rc.output_dir}")
    return EXIT_OK


# ------------------------------------------------------------------ eval


def _config_from_checkpoint(meta: dict, source: str) -> RunConfig:
    rc = RunConfig.from_dict(meta["config"], source=source)
    return rc.resolve(Path.cwd())


def run_eval(params, rc: RunConfig, episodes: int, deterministic: bool,
             seed: int) -> dict:
    model, clips = load_assets(rc)
    env = make_env(rc, model, clips, seed)
    params.normalizer.frozen = True
    rng = np.random.default_rng(seed)
    rewards, lengths = [], []
    terms = np.zeros(4)
    steps = 0
    for _ in range(episodes):
        obs = env.reset()
        done = False
        total = 0.0
        length = 0
        while not done:
            mean, log_std, _ = policy_forward(params, obs)
            u = mean if deterministic else sample_pre_squash(mean, log_std, rng)
            obs, breakdown, done, _ = env.step(np.tanh(u))
            total += breakdown.total
            terms += (breakdown.pose_term, breakdown.velocity_term,
                      breakdown.com_term, breakdown.angmom_term)
            length += 1
        rewards.append(total)
        lengths.append(length)
        steps += length
    terms /= max(steps, 1)
    return {
        "episodes": episodes,
        "mean_reward": float(np.mean(rewards)),
        "mean_episode_length": float(np.mean(lengths)),
        "mean_pose_term": float(terms[0]),
        "mean_velocity_term": float(terms[1]),
        "mean_com_term": float(terms[2]),
        "mean_angmom_term": float(terms[3]),
    }


def cmd_eval(args) -> int:
    params, meta = load_checkpoint(args.checkpoint)
    rc = _config_from_checkpoint(meta, args.checkpoint)
    summary = run_eval(params, rc, args.episodes, args.deterministic, args.seed)
    for key in ("episodes", "mean_reward", "mean_episode_length",
                "mean_pose_term", "mean_velocity_term", "mean_com_term",
                "mean_angmom_term"):
        print(f"{key} {summary[key]:.6g}")
    return EXIT_OK


# ----------------------------------------------------------- inspect-obs


def cmd_inspect_obs(args) -> int:
    rc = load_run_config(args.config, args.set)
    model, _ = load_assets(rc)
    layout = observation_layout(rc.task, model, rc.angmom_observation)
    print(f"task {rc.task}  character {model.name}  features {layout.total}")
    print(f"{'segment':<22}{'offset':>8}{'length':>8}")
    offset = 0
    for name, n in layout.segments:
        print(f"{name:<22}{offset:>8}{n:>8}")
        offset += n
    dims = "  ".join(f"{m.value}={action_dim(model, m)}" for m in ActionMode)
    print(f"action dims: {dims}")
    return EXIT_OK


# ---------------------------------------------------------------- replay


def cmd_replay(args) -> int:
    params, meta = load_checkpoint(args.checkpoint)
    rc = _config_from_checkpoint(meta, args.checkpoint)
    if args.clip:
        rc.clip = args.clip
        rc.resolve(Path.cwd())
    model, clips = load_assets(rc)
    env = make_env(rc, model, clips, args.seed)
    params.normalizer.frozen = True
    rng = np.random.default_rng(args.seed)
    frames = record_episode(env, params, rng, deterministic=args.deterministic)
    header = make_header(model, rc.task, args.seed)
    path = save_trajectory(header, frames, args.out)
    print(f"wrote {len(frames)} frames to {path}")
    return EXIT_OK


# ----------------------------------------------------------------- serve


def cmd_serve(args) -> int:
    from charsim.bridge import run_session

    params, meta = load_checkpoint(args.checkpoint)
    rc = _config_from_checkpoint(meta, args.checkpoint)
    return run_session(params, rc, port=args.port, host=args.host)


# ------------------------------------------------------------- arguments


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charsim",
        description="Train and run physics-simulated characters that track "
                    "reference motions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_arg(p):
        p.add_argument("config", help="run config path or bundled config name")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field (dotted keys reach "
                            "episode.* and ppo.*)")

    p = sub.add_parser("train", help="train a policy from a run config")
    add_config_arg(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--deterministic", action="store_true",
                   help="use the mean action instead of sampling")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect-obs",
                       help="print the observation layout for a run config")
    add_config_arg(p)
    p.set_defaults(func=cmd_inspect_obs)

    p = sub.add_parser("replay",
                       help="roll one episode and write a trajectory file")
    p.add_argument("checkpoint")
    p.add_argument("--out", default="replay.jsonl")
    p.add_argument("--clip", help="substitute reference clip (mimic only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve",
                       help="serve a live steering session over a websocket")
    p.add_argument("checkpoint")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, FileNotFoundError) as e:
        log.debug("config error", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports, not raises
        log.debug("runtime error", exc_info=True)
        if os.environ.get("CHARSIM_LOG", "").lower() == "debug":
            raise
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
