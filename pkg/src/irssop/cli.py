"""Command line front end.

    irssop sweep-k --config configs/fig1_worst_case.cfg --out sweep_k.csv

Every subcommand loads an optional configuration file, applies the flags on top
and runs the experiment family of the same name. Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING, get_args

from irssop.config import ExperimentSpec, load_config
from irssop.constants import ExperimentKindValues, OutputFormat
from irssop.errors import ConfigError, NumericalError
from irssop.experiments import run_experiment, write_results

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_DESCRIPTIONS = {
    "sop-point": "Analytic, series, bound and simulated SOP at a single K.",
    "sweep-k": "SOP against the number of selected IRS elements.",
    "sweep-n": "SOP against the IRS size, without and with optimal selection.",
    "optimal-k": "Best number of selected elements per scenario.",
    "validate-dist": "Check the SNR distribution models against simulation.",
}


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="Configuration file.")
    parser.add_argument(
        "--out", type=Path, help="Result file; CSV on stdout when omitted."
    )
    parser.add_argument("--seed", type=int, help="Root seed of the simulation.")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials per point.")
    parser.add_argument(
        "--workers", type=int, help="Worker processes, 0 for all cores."
    )
    parser.add_argument("--format", choices=get_args(OutputFormat))
    parser.add_argument(
        "--no-mc", action="store_true", help="Analytic columns only."
    )
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irssop",
        description="Secrecy outage of IRS-assisted links with element selection.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for kind in ExperimentKindValues:
        sub = commands.add_parser(kind, help=_DESCRIPTIONS[kind])
        _add_common_arguments(sub)
        if kind == "sop-point":
            sub.add_argument("--K", type=int, help="Selected elements, all if unset.")
        if kind == "validate-dist":
            sub.add_argument(
                "--corrupt-kappa",
                type=float,
                help="Scale the predicted Gamma shapes; checks should then fail.",
            )
    return parser


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    """The configuration file (or the defaults) with the flags applied.

    Raises:
        ConfigError: If a flag value is invalid for the resolved configuration.
    """
    spec = load_config(args.config) if args.config else ExperimentSpec()
    mc_changes = {
        name: value
        for name, value in (
            ("trials", args.trials),
            ("seed", args.seed),
            ("workers", args.workers),
        )
        if value is not None
    }
    output_changes: dict[str, object] = {}
    if args.out is not None:
        output_changes["path"] = args.out
    if args.format is not None:
        output_changes["format"] = args.format

    changes: dict[str, object] = {"kind": args.command}
    if getattr(args, "K", None) is not None:
        changes["K"] = args.K
    if getattr(args, "corrupt_kappa", None) is not None:
        changes["corrupt_kappa"] = args.corrupt_kappa
    if args.no_mc:
        changes["run_mc"] = False
    return spec.replace(
        mc=dataclasses.replace(spec.mc, **mc_changes),
        output=dataclasses.replace(spec.output, **output_changes),
        **changes,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        spec = resolve_spec(args)
        table = run_experiment(spec)
        write_results(spec, table)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
