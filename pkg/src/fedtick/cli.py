"""Command line entry point: ``fedtick run|sweep|verify-theory|presets``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

from fedtick.config import ConfigError, load_config, resolve, with_overrides
from fedtick.experiments import run_experiment, sweep, verify_theory
from fedtick.presets import PRESETS
from fedtick.schedules import KINDS


def _add_run_args(p):
    p.add_argument("--config", help="JSON experiment config (defaults apply when omitted)")
    p.add_argument("--seed", type=int, action="append", help="seed; repeat for several")
    p.add_argument("--rounds", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--schedule", choices=KINDS)


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else resolve({})
    return with_overrides(
        cfg,
        **{
            "seeds": args.seed,
            "rounds": args.rounds,
            "out": args.out,
            "preset": args.preset,
            "schedule.kind": getattr(args, "schedule", None),
        },
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedtick", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train one schedule over every seed")
    _add_run_args(p_run)

    p_sweep = sub.add_parser("sweep", help="train all eight schedules")
    _add_run_args(p_sweep)

    p_theory = sub.add_parser("verify-theory", help="check closed forms against grid oracles")
    p_theory.add_argument("--samples", type=int, default=1000)
    p_theory.add_argument("--seed", type=int, default=0)
    p_theory.add_argument("--out", help="write the JSON report here as well as stdout")

    sub.add_parser("presets", help="list the built-in task presets")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "presets":
            for name, preset in PRESETS.items():
                print(json.dumps(asdict(preset)))
            return 0
        if args.command == "verify-theory":
            if args.samples < 1:
                print("error: --samples must be >= 1", file=sys.stderr)
                return 2
            report = verify_theory(args.samples, args.seed)
            text = json.dumps(report, indent=2, sort_keys=True)
            print(text)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text + "\n")
            return 0 if report["passed"] else 1
        cfg = _config_from_args(args)
        if args.command == "run":
            result = run_experiment(cfg)
            for path in result["files"]:
                print(path)
        else:
            for row in sweep(cfg):
                clean = {k: (None if isinstance(v, float) and v != v else v) for k, v in row.items()}
                print(json.dumps(clean))
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
