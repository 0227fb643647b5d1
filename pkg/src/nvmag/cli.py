"""Command line interface: ``nvmag <mode> --config <file> [--out DIR] [--seed N]``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import traceback

from .runner import MODES, ConfigError, ExperimentConfig, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvmag",
        description="NV-ensemble DC magnetometry simulation and analysis runner",
    )
    parser.add_argument("mode", choices=MODES, help="experiment mode")
    parser.add_argument("--config", required=True, help="INI configuration file")
    parser.add_argument("--out", default="nvmag-out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured RNG seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config, mode=args.mode,
                                            seed=args.seed)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (OSError, ValueError, configparser.Error) as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return 1
    try:
        result = run(config, args.out)
    except Exception as exc:  # runtime failure: propagate module context
        print(f"{config.mode} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        traceback.print_exc()
        return 2
    print(f"wrote {len(result.artifacts)} artifacts to {args.out}")
    try:
        with open(args.out + "/summary.txt") as fh:
            print(fh.read().rstrip())
    except OSError:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
