"""Command-line entry point and run configuration."""

from .config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    find_config,
    load_assets,
    load_run_config,
    make_env,
    make_params,
    make_trainer,
    parse_override,
)
from .main import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, build_parser, main, run_eval
from .trajectory import (
    TrajectoryError,
    load_trajectory,
    make_frame,
    make_header,
    record_episode,
    save_trajectory,
)

__all__ = [
    "ConfigError",
    "EXIT_CONFIG",
    "EXIT_OK",
    "EXIT_RUNTIME",
    "RunConfig",
    "TrajectoryError",
    "apply_overrides",
    "build_parser",
    "find_config",
    "load_assets",
    "load_run_config",
    "load_trajectory",
    "main",
    "make_env",
    "make_frame",
    "make_header",
    "make_params",
    "make_trainer",
    "parse_override",
    "record_episode",
    "run_eval",
    "save_trajectory",
]
