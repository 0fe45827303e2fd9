"""Command-line harness: one subcommand per experiment.

Every subcommand takes ``--config <file.json>`` and ``--out <dir>``; sweeps
additionally honor ``--threads``.  Exit codes: 0 on success, 2 on config
errors, 3 when the solver aborts.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (ConfigError, load_config, run_cosine_sweep,
                          run_laminate_sweep, run_motivate, run_smooth_vs_sharp,
                          run_solve, run_topopt)
from .solver import SolverAbortError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jfft",
        description="FFT-accelerated PCG solvers for periodic elasticity "
                    "cell problems (Green, Jacobi, and Green-Jacobi "
                    "preconditioning).")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
            ("solve", "solve one cell problem"),
            ("laminate-sweep", "iteration counts over the laminate geometry"),
            ("cosine-sweep", "iteration counts over the cosine geometry"),
            ("motivate", "iteration counts along a Gaussian-filter cascade"),
            ("topopt", "phase-field topology optimization"),
            ("smooth-vs-sharp", "residual histories for smooth and "
                                "thresholded densities")):
        cmd = sub.add_parser(name, help=desc)
        cmd.add_argument("--config", required=True, help="JSON config file")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker processes for independent sweep cells")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.command == "solve":
            run_solve(cfg, out)
        elif args.command == "laminate-sweep":
            run_laminate_sweep(cfg, out, workers=args.threads)
        elif args.command == "cosine-sweep":
            run_cosine_sweep(cfg, out, workers=args.threads)
        elif args.command == "motivate":
            run_motivate(cfg, out)
        elif args.command == "topopt":
            run_topopt(cfg, out)
        else:
            run_smooth_vs_sharp(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverAbortError as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
