"""Command line entry point: ``convpoints <subcommand> --config ... --out ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .ladder import build_ladder, validate_ladder
from .noise import parse_seed
from .runner import SEED_ENV, RunConfig, resolve_config, run

SUBCOMMANDS = ("ladder", "construct", "diagnose", "sweep", "dimension")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convpoints",
                                description="Simulate random trigonometric series and the set of "
                                            "points where they converge.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True,
                       help="JSON config file or bundled preset name (smoke, desk, frostman)")
        s.add_argument("--seed", help="seed as decimal or 0x-prefixed hex; replaces the config seeds")
        s.add_argument("--threads", type=int, help="worker threads (speed only)")
        if name != "ladder":
            s.add_argument("--out", required=True, help="output directory")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def apply_overrides(cfg: RunConfig, args) -> tuple[RunConfig, str]:
    """Flags beat the environment, which beats the config file."""
    source = "config"
    env = os.environ.get(SEED_ENV)
    if env:
        cfg = replace(cfg, seeds=[parse_seed(env)])
        source = f"env:{SEED_ENV}"
    if args.seed is not None:
        cfg = replace(cfg, seeds=[parse_seed(args.seed)])
        source = "flag"
    if args.threads is not None:
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        cfg = replace(cfg, threads=args.threads)
    return cfg, source


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, source = apply_overrides(resolve_config(args.config), args)
        if args.command == "ladder":
            ladder = build_ladder(cfg.ladder, cfg.coefficients)
            out = json.loads(ladder.to_json())
            out["warnings"] = validate_ladder(ladder)
            print(json.dumps(out, indent=2))
            return 0
        cfg = replace(cfg, experiment=args.command)
        cfg.validate()
        manifest, code = run(cfg, args.out, source)
    except (ValueError, OSError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"out": args.out, "exit_code": code, "complete": manifest["complete"]}))
    return code


if __name__ == "__main__":
    sys.exit(main())
