"""Batch command-line front end.

Usage::

    sgs run <config>        # execute one experiment, write its products
    sgs validate <config>   # dry-run schema and invariant check
    sgs version             # package version and active backend

Exit codes: 0 ok, 2 config error, 3 numerical error, 4 I/O error. The
environment variable ``SGS_THREADS`` caps internal parallelism (FFT workers
and the numerical backend's thread pools).
"""

import argparse
import json
import os
import sys


def _apply_thread_cap():
    cap = os.environ.get("SGS_THREADS")
    if not cap:
        return None
    try:
        n = max(1, int(cap))
    except ValueError:
        print(f"sgs: ignoring non-integer SGS_THREADS={cap!r}", file=sys.stderr)
        return None
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    return n


def main(argv=None):
    thread_cap = _apply_thread_cap()  # before numpy-heavy imports

    from . import __version__
    from . import backend, config, experiments, grid
    from .errors import ConfigError, NumericalError

    if thread_cap is not None:
        grid.FFT_WORKERS = thread_cap

    parser = argparse.ArgumentParser(
        prog="sgs", description="Soliton + pilot-wave batch simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute one experiment config")
    run_p.add_argument("config", help="path to a flat key-value config file")
    val_p = sub.add_parser("validate", help="check a config without computing")
    val_p.add_argument("config", help="path to a flat key-value config file")
    sub.add_parser("version", help="print version and backend")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(f"sgs {__version__} (backend: {backend.backend_name()})")
        return 0

    try:
        raw = config.parse_config_file(args.config)
        cfg = config.resolve(raw)
        if args.command == "validate":
            report = experiments.validate(cfg)
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0
        written = experiments.run(cfg)
        for path in written:
            print(path)
        return 0
    except ConfigError as exc:
        print(f"sgs: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"sgs: numerical error: {exc.__class__.__name__}: {exc}",
              file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"sgs: i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
