"""Command line entry point: ``sparsedom {a2-scaling,dominate,variation,check}``."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .experiments import (ExperimentConfig, run_a2_scaling, run_domination_suite,
                          run_variation_suite, write_table)

RUNNERS = {
    "a2-scaling": (run_a2_scaling, "a2_scaling.csv"),
    "dominate": (run_domination_suite, "domination.csv"),
    "variation": (run_variation_suite, "variation.csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsedom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(RUNNERS) + ["check"]:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, help="seed for the random battery entries")
        p.add_argument("--threads", type=int, help="worker threads for independent runs")
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    changes = {k: v for k, v in (("seed", args.seed), ("threads", args.threads)) if v is not None}
    return dataclasses.replace(cfg, **changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "check":
        from .checks import run_all

        results = run_all(cfg.seed)
        for r in results:
            print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}  {r['detail']}")
        return 0 if all(r["passed"] for r in results) else 1
    runner, filename = RUNNERS[args.command]
    rows = runner(cfg)
    path = write_table(rows, args.out / filename, cfg, args.command)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
