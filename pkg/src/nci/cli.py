"""Command-line entry point.

    nci <experiment> --config <path> [--threads K] [--resume]
    nci validate --config <path>

Exit codes: 0 success, 1 configuration error, 2 some tasks failed. The
thread count falls back to the ``NCI_THREADS`` environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys

from .exceptions import ConfigError, SemanticError
from .harness.config import validate_config
from .harness.experiments import EXPERIMENTS
from .harness.runner import run_sweep, summary_path

__all__ = ["main"]


def _parser():
    p = argparse.ArgumentParser(prog="nci", description="Run a declarative parameter sweep.")
    p.add_argument("command", choices=["validate", *EXPERIMENTS])
    p.add_argument("--config", required=True, help="sweep configuration file")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $NCI_THREADS or 1)")
    p.add_argument("--resume", action="store_true",
                   help="keep an existing output file and skip completed tasks")
    return p


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("NCI_THREADS")
    try:
        return int(env) if env else 1
    except ValueError:
        raise ConfigError(f"NCI_THREADS must be an integer, got {env!r}") from None


def _report_config_error(exc):
    if isinstance(exc, SemanticError):
        print(f"config error: {len(exc.errors)} problem(s)", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
    else:
        print(f"config error: {exc}", file=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = validate_config(args.config)
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.command != "validate" and args.command != config.experiment:
            raise ConfigError(f"config describes {config.experiment!r}, not {args.command!r}")
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        _report_config_error(exc)
        return 1
    if args.command == "validate":
        n = len(config.seeds)
        for ax in config.grid:
            n *= ax.count
        print(f"ok: {config.experiment}, {n} tasks")
        return 0
    report = run_sweep(config, threads=threads, resume=args.resume)
    total = sum(r.n_ok + r.n_failed for r in report.summary)
    print(f"{total} tasks, {report.failed} failed, {report.skipped} skipped; "
          f"records in {report.output}, summary in {summary_path(report.output)}",
          file=sys.stderr)
    return 2 if report.failed else 0


if __name__ == "__main__":
    sys.exit(main())
