"""
Command-line entry point for the dual semismooth Newton experiments
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

import src.commands.checks as checks_command
import src.commands.continuation as continuation_command
import src.commands.properties as properties_command
import src.commands.solve as solve_command
import src.commands.sweep as sweep_command
from src.commands import EXIT_CONFIG
from src.config import LOG_LEVEL_ENV, RunKind, load_run_config
from src.errors import ConfigError

logger = logging.getLogger("dualprox")

COMMANDS = {
    RunKind.SOLVE: ("Solve one problem and print its table row", solve_command.run),
    RunKind.SWEEP_MESH: ("Solve on every mesh in ns", sweep_command.run_mesh),
    RunKind.SWEEP_ALPHA: ("Solve for every alpha in alphas", sweep_command.run_alpha),
    RunKind.CONTINUATION: (
        "Solve for descending alphas, warm-starting each solve",
        continuation_command.run,
    ),
    RunKind.CHECK_GRADIENT: (
        "Compare the dual gradient with central differences",
        checks_command.run_gradient,
    ),
    RunKind.CHECK_SEMISMOOTH: (
        "Taylor remainders of the dual objective with the generalized Hessian",
        checks_command.run_semismooth,
    ),
    RunKind.PROPERTIES: ("Run the runtime property suite", properties_command.run),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualprox",
        description="Globalized inexact semismooth Newton on the dual of "
        "elliptic optimal control problems",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        help=f"logging level (default: ${LOG_LEVEL_ENV} or INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind, (help_text, _) in COMMANDS.items():
        cmd = sub.add_parser(kind.value, help=help_text, description=help_text)
        cmd.add_argument("--config", type=Path, help="flat key=value config file")
        cmd.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
        cmd.add_argument("--output", type=Path, help="CSV file for the results")
        cmd.add_argument("--mode", choices=["p0", "variational"])
        cmd.add_argument(
            "--unglobalized",
            action="store_true",
            help="take full Newton steps without line search",
        )
        cmd.add_argument(
            "--large",
            action="store_true",
            help="allow meshes beyond desk scale",
        )
        if kind is RunKind.SOLVE:
            cmd.add_argument(
                "--fields",
                type=Path,
                help="CSV of the final control and prox derivative per cell",
            )
    return parser


def configure_logging(level_name=None):
    level_name = (level_name or os.environ.get(LOG_LEVEL_ENV) or "INFO").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        raise ConfigError(f"unknown log level {level_name!r}")
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def main(argv=None) -> int:
    """Parse arguments, build the run configuration and dispatch."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        kind = RunKind(args.command)
        cfg = load_run_config(
            kind,
            config_path=args.config,
            overrides=args.overrides,
            mode=args.mode,
            unglobalized=args.unglobalized,
            output=args.output,
            fields=getattr(args, "fields", None),
            large=args.large,
        )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    _, handler = COMMANDS[kind]
    return handler(cfg)


if __name__ == "__main__":
    sys.exit(main())
