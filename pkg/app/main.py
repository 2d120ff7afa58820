import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import structlog
from pydantic import ValidationError

from app import __version__
from app.config import settings
from app.errors import EXIT_OK, EXIT_VALIDATION, ConfigError, VortexError
from app.services.output import OutputWriter
from app.services.runner import (
    cmd_dispersion,
    cmd_eigen,
    cmd_simulate,
    cmd_spectrum,
    cmd_validate,
    load_config,
    run_directory,
)


def _stderr_logger(*args) -> structlog.PrintLogger:
    return structlog.PrintLogger(sys.stderr)


def configure_logging(quiet: bool = False) -> None:
    level = logging.WARNING if quiet else logging.getLevelName(settings.log_level.upper())
    renderer = (
        structlog.processors.JSONRenderer()
        if settings.log_json
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.add_log_level,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=_stderr_logger,
    )


logger = structlog.get_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortex-levels",
        description="Vortex filament dynamics and circulation levels in a cylinder",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")

    configured = argparse.ArgumentParser(add_help=False, parents=[common])
    configured.add_argument("--config", type=Path, required=True, help="YAML run config")

    sub = parser.add_subparsers(dest="command", required=True)

    disp = sub.add_parser("dispersion", parents=[common], help="tabulate omega_n")
    disp.add_argument("--n-min", type=int, default=1)
    disp.add_argument("--n-max", type=int, default=10)

    sub.add_parser("simulate", parents=[configured], help="evolve a filament")
    sub.add_parser("validate", parents=[configured], help="validate a config only")
    for name, text in (("eigen", "Dirichlet eigenvalues"), ("spectrum", "circulation levels")):
        p = sub.add_parser(name, parents=[configured], help=text)
        p.add_argument("--force-grid", action="store_true", help="skip the closed form")
        p.add_argument("--grid-h", type=float, default=None, help="grid spacing")
    return parser


def run(args: argparse.Namespace) -> dict:
    if args.command == "dispersion":
        writer = OutputWriter(args.out) if args.out is not None else None
        return cmd_dispersion(args.n_min, args.n_max, writer)

    config = load_config(args.config)
    if args.command == "validate":
        return cmd_validate(config)

    writer = OutputWriter(run_directory(config, args.out), config_path=args.config)
    if args.command == "simulate":
        return cmd_simulate(config, writer)
    if args.command == "eigen":
        return cmd_eigen(config, writer, force_grid=args.force_grid, grid_h=args.grid_h)
    return cmd_spectrum(config, writer, force_grid=args.force_grid, grid_h=args.grid_h)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)
    try:
        summary = run(args)
    except ConfigError as e:
        logger.error("config_invalid", problems=e.problems)
        print(str(e), file=sys.stderr)
        return e.exit_code
    except VortexError as e:
        logger.error("command_failed", command=args.command, error=str(e),
                     kind=type(e).__name__)
        return e.exit_code
    except (ValidationError, ValueError) as e:
        logger.error("command_rejected", command=args.command, error=str(e))
        return EXIT_VALIDATION
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
