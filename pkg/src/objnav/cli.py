"""Command-line entry point: ``objnav run --config FILE [overrides]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from typing import List, Optional

from .policy import POLICIES, REPRESENTATIONS
from .reward import format_report
from .runner import ConfigError, RunConfig, load_config, run_batch
from .simulator import SceneGenerationError

log = logging.getLogger("objnav")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="objnav", description="Object-goal navigation evaluation harness.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a policy on a batch of generated episodes")
    run.add_argument("--config", required=True, help="TOML or JSON run configuration")
    run.add_argument("--seed", type=int, help="base seed (overrides the config)")
    run.add_argument("--policy", choices=sorted(POLICIES))
    run.add_argument("--repr", dest="representation", choices=REPRESENTATIONS)
    run.add_argument("--episodes", type=int)
    run.add_argument("--out", dest="out_dir", help="output directory")
    run.add_argument("--dump-maps", action="store_true", default=None,
                     help="write every map channel at every step")
    run.add_argument("--workers", type=int, help="worker processes for the batch")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config)
    overrides = {k: getattr(args, k)
                 for k in ("seed", "policy", "representation", "episodes", "out_dir", "dump_maps", "workers")
                 if getattr(args, k) is not None}
    try:
        return dataclasses.replace(config, **overrides)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %d %s episodes (%s) into %s", config.episodes, config.policy,
             config.representation, config.out_dir)
    try:
        report, _ = run_batch(config)
    except SceneGenerationError as exc:
        print(f"error: scene generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    print(format_report(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
