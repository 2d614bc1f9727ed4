"""``simulate`` command line entry point."""

import argparse
import logging
import os
import sys

from .errors import MimoEEError
from .harness import emit, load_scenario
from .harness.runner import SWEEPS

LOG_LEVEL_ENV = "MIMO_EE_LOG_LEVEL"


def build_parser():
    p = argparse.ArgumentParser(prog="simulate", description="Energy-efficiency sweeps for FD, hybrid and DMA transmitters.")
    p.add_argument("--config", required=True, help="TOML scenario file")
    p.add_argument("--sweep", choices=sorted(SWEEPS), default="none")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--pa-model", choices=("linear", "nonlinear"))
    p.add_argument("--workers", type=int)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        print(f"simulate: error: {LOG_LEVEL_ENV}={level!r} is not a logging level", file=sys.stderr)
        return 2
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = load_scenario(args.config)
        changes = {}
        if args.trials is not None:
            changes["trials"] = args.trials
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.workers is not None:
            changes["workers"] = args.workers
        if args.pa_model is not None:
            changes["power.amplifier_model"] = args.pa_model
        if changes:
            scenario = scenario.with_(**changes)
        result = SWEEPS[args.sweep](scenario)
        paths = emit(result, args.out, args.sweep)
    except (OSError, MimoEEError, ValueError) as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
