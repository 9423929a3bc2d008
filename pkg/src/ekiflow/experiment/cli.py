"""Command line entry point ``eki``.

Usage::

    eki run <config.json> [--output DIR] [--seed N] [--replicates R] [-v]
    eki list

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid configuration.
"""

# stdlib
import argparse
import json
import logging
import sys
from typing import List
from typing import Optional

from ekiflow import __version__
from ekiflow.config import THREADS_ENV_VAR
from ekiflow.config import Config

from .experiment_config import parse_config
from .experiment_config import with_overrides
from .registry import ConfigError
from .registry import ExperimentRegistry
from .runner import EXIT_CONFIG_ERROR
from .runner import EXIT_PASSED
from .runner import run_experiment

logger = logging.getLogger(__name__)


def parse_args(argv: List[str]) -> argparse.Namespace:
    """Parse command line parameters.

    Args:
        argv (List[str]): Command line parameters as list of strings.

    Returns:
        argparse.Namespace: Command line parameters namespace.
    """
    parser = argparse.ArgumentParser(
        prog="eki", description="Ensemble Kalman inversion experiments"
    )
    parser.add_argument(
        "--version", action="version", version=f"ekiflow {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment configuration")
    run.add_argument("config", help="path of the JSON configuration")
    run.add_argument("--output", default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="root seed")
    run.add_argument(
        "--replicates", type=int, default=None, help="stochastic replicates"
    )
    run.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v for INFO, -vv for DEBUG messages on stderr",
    )

    commands.add_parser("list", help="print the registered experiments")
    return parser.parse_args(argv)


def setup_logging(verbosity: int) -> None:
    """Configure logging on stderr.

    Args:
        verbosity (int): 0 for WARNING, 1 for INFO, 2 or more for DEBUG.
    """
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbosity, 2)]
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="[%(asctime)s] %(levelname)s:%(name)s:%(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _report_config_error(error: ConfigError) -> int:
    print(json.dumps(error.to_json(), sort_keys=True), file=sys.stderr)
    return EXIT_CONFIG_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line.

    Args:
        argv (Optional[List[str]]): Arguments, defaults to sys.argv[1:].

    Returns:
        int: Exit code.
    """
    args = parse_args(sys.argv[1:] if argv is None else argv)

    if args.command == "list":
        for name in ExperimentRegistry.names():
            print(name)
        return EXIT_PASSED

    setup_logging(args.verbose)
    try:
        cfg = parse_config(args.config)
        cfg = with_overrides(
            cfg, output_dir=args.output, seed=args.seed, replicates=args.replicates
        )
    except ConfigError as e:
        return _report_config_error(e)

    try:
        config = Config.from_env()
    except ValueError as e:
        return _report_config_error(ConfigError(f"env.{THREADS_ENV_VAR}", str(e)))

    return run_experiment(cfg, config)


def run() -> None:
    """Entry point for console_scripts."""
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
