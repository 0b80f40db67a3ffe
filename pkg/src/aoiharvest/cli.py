"""Command line entry point: run named experiments from a config file.

    aoiharvest run <config> [--experiment NAME] [--out DIR] [--seed N] [--trials N]
    aoiharvest validate <config>
    aoiharvest list-experiments

Exit codes: 0 success, 1 config/runtime error, 2 unknown experiment name.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import EXPERIMENT_NAMES, ConfigError, parse_config
from .experiments import UnknownExperimentError, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoiharvest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV outputs")
    run.add_argument("config", help="path to the config file")
    run.add_argument("--experiment", help="override the experiment name")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--seed", type=int, help="override the seed")
    run.add_argument("--trials", type=int, help="override the Monte Carlo trial count")
    run.add_argument("--plot", action="store_true", help="also write an SVG line chart")

    val = sub.add_parser("validate", help="parse a config file and report the resolved settings")
    val.add_argument("config", help="path to the config file")

    sub.add_parser("list-experiments", help="print the valid experiment names")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENT_NAMES:
            print(name)
        return 0

    try:
        cfg, spec = parse_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        print(f"config ok: {args.config}")
        for key, value in dataclasses.asdict(cfg).items():
            print(f"  network.{key} = {value}")
        print(f"  experiment = {spec.name} (trials={spec.trials}, seed={spec.seed})")
        return 0

    overrides = {}
    if args.experiment is not None:
        if args.experiment not in EXPERIMENT_NAMES:
            print(f"error: unknown experiment {args.experiment!r}; valid names: "
                  f"{', '.join(EXPERIMENT_NAMES)}", file=sys.stderr)
            return 2
        overrides["name"] = args.experiment
        if spec.sweep is not None and args.experiment != spec.name:
            overrides["sweep"] = None  # a file sweep axis does not carry across experiments
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        spec = dataclasses.replace(spec, **overrides)

    try:
        paths = run_experiment(cfg, spec, plot=args.plot)
    except UnknownExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
