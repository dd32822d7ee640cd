"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 stage failure.  The
worker count comes from --threads, falling back to the ISARFF_THREADS
environment variable, then 1.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import load_pipeline_config
from .errors import ConfigError, IsarffError, StageError
from .pipeline import STAGES, TOOL_VERSION, run_pipeline, stage_render

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ISARFF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"ISARFF_THREADS must be an integer, got {env!r}") from exc
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isarff",
        description="Simulate ISAR frame sequences and track persistent line features.",
    )
    parser.add_argument("--version", action="version", version=f"isarff {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = ["simulate", "align", "edges", "detect", "cluster", "analyze", "render", "pipeline"]
    for name in commands:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
        if name == "render":
            p.add_argument("--base", choices=["mean", "median"], default="mean")
            p.add_argument("--output", default="overlay.png")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_pipeline_config(args.config)
        threads = _threads(args)
        out_dir = Path(args.out)
        if args.command == "pipeline":
            run_pipeline(cfg, out_dir, threads=threads, config_path=args.config)
        elif args.command == "render":
            stage_render(cfg, out_dir, base=args.base, output=args.output)
        else:
            out_dir.mkdir(parents=True, exist_ok=True)
            try:
                STAGES[args.command](cfg, out_dir, threads)
            except IsarffError:
                raise
            except Exception as exc:
                raise StageError(args.command, str(exc)) from exc
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IsarffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
