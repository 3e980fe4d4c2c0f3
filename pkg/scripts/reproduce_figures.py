"""Runs every experiment family for every configuration in a directory.

    python -m scripts.reproduce_figures --config-dir configs --out-dir results

Each `<name>.cfg` produces `<out-dir>/<name>_<kind>.csv` plus its metadata
sidecar. The experiment kind stored in a configuration is ignored.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
from pathlib import Path

from irssop.config import load_config
from irssop.constants import ExperimentKindValues
from irssop.experiments import run_experiment, write_results

logger = logging.getLogger(__name__)


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Regenerate the result tables for a directory of configurations.",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    parser.add_argument("--config-dir", type=Path, default=Path("configs"))
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument(
        "--trials", type=int, help="Override the Monte-Carlo trials per point."
    )
    parser.add_argument("--workers", type=int, help="Override the worker count.")
    parser.add_argument(
        "--kinds",
        nargs="+",
        choices=ExperimentKindValues,
        default=list(ExperimentKindValues),
        help="Experiment families to run (default: all).",
    )
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    configs = sorted(args.config_dir.glob("*.cfg"))
    if not configs:
        raise FileNotFoundError(f"No *.cfg files in {args.config_dir}")
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for config_path in configs:
        base = load_config(config_path)
        mc_changes = {}
        if args.trials is not None:
            mc_changes["trials"] = args.trials
        if args.workers is not None:
            mc_changes["workers"] = args.workers
        for kind in args.kinds:
            out = args.out_dir / f"{config_path.stem}_{kind}.csv"
            spec = base.replace(
                kind=kind,
                mc=dataclasses.replace(base.mc, **mc_changes),
                output=dataclasses.replace(base.output, path=out, format="csv"),
            )
            logger.info(f"{config_path.name}: {kind} -> {out}")
            write_results(spec, run_experiment(spec))


if __name__ == "__main__":
    main()
