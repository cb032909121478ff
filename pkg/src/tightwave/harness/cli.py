"""Command-line entry point."""
from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError
from .artifact import write_artifact
from .config import COMMANDS, apply_overrides, load_config
from .run import run

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3, 4


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tightwave",
                                description="Max-type recursions, validators and simulators.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides outputs.directory)")
    p.add_argument("--seed", type=_u64, help="master seed (overrides mc.seed)")
    p.add_argument("--reps", type=_positive, help="Monte Carlo replicas (overrides mc.reps)")
    p.add_argument("--iterations", type=_nonneg, help="recursion steps (overrides iterations)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg.command = args.command  # the positional command wins over the file
        apply_overrides(cfg, out=args.out, seed=args.seed, reps=args.reps,
                        iterations=args.iterations)
        art = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        path = write_artifact(art, cfg.outputs.directory)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    line = f"{cfg.command}: {art.status} ({path.parent})"
    if art.status != "success":
        line += f" {art.summary}"
    print(line)
    return art.exit_code


if __name__ == "__main__":
    sys.exit(main())
