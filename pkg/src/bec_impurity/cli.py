"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 missing input artifact.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__, analytic, pipeline
from .gpe import NumericalError
from .io import MissingArtifactError
from .params import ConfigError, default_config, load_config

log = logging.getLogger("bec_impurity")

EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISSING = 2, 3, 4


def _omega_grid(args):
    if args.points < 1:
        raise ConfigError("--points must be at least 1")
    if not 0 < args.omega_min <= args.omega_max:
        raise ConfigError("need 0 < --omega-min <= --omega-max")
    return np.linspace(args.omega_min, args.omega_max, args.points)


def _add_sweep(p, lo=1.0, hi=60.0, points=60):
    p.add_argument("--omega-min", type=float, default=lo)
    p.add_argument("--omega-max", type=float, default=hi)
    p.add_argument("--points", type=int, default=points)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bec-impurity",
        description="Impurity damping in a trapped condensate: ground state, bath "
                    "correlation, memory kernel, trajectories and rates.")
    parser.add_argument("--config", help="run configuration (key = value lines); "
                                         "defaults to the built-in reference set")
    parser.add_argument("--out-dir", default=".", help="directory for all artifacts")
    parser.add_argument("--parallel", type=int, default=1,
                        help="worker processes for frequency sweeps")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; every method is deterministic")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groundstate", help="imaginary-time ground state -> psi0.bin")
    p.add_argument("--n", type=int, default=None, help="grid points per axis")
    p.add_argument("--out", default=pipeline.CHECKPOINT, help="checkpoint file name")

    p = sub.add_parser("correlate", help="Im alpha(t) -> correlation.csv")
    p.add_argument("--T", type=float, default=None, dest="t_final",
                   help="propagation time (default 2 sqrt(2) pi)")
    p.add_argument("--checkpoint", default=None)

    sub.add_parser("kernel", help="damping kernels -> kernel.csv, kernel_truncated.csv")
    sub.add_parser("spectral", help="spectral density -> spectral.csv")

    p = sub.add_parser("dynamics", help="memory oscillator -> trajectory.csv")
    p.add_argument("--kernel", default=None, help="kernel CSV (default OUT/kernel.csv)")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--T", type=float, default=8.0, dest="t_final")
    p.add_argument("--q0", type=float, default=0.0)
    p.add_argument("--v0", type=float, default=1.0)

    p = sub.add_parser("ratesweep", help="gamma(omega) -> rates.csv")
    _add_sweep(p)
    p.add_argument("--methods", default="golden_rule,laplace,fit")
    p.add_argument("--T", type=float, default=None, dest="t_final",
                   help="integration time for fitted rates")

    p = sub.add_parser("analytic", help="homogeneous-gas rate -> rates_analytic.csv")
    _add_sweep(p)
    p.add_argument("--mu", type=float, default=None,
                   help="chemical potential (default: ground state, else Thomas-Fermi)")
    p.add_argument("--out", default="rates_analytic.csv")

    p = sub.add_parser("toy", help="delayed-return toy model -> toy.csv")
    p.add_argument("--gamma1", type=float, required=True)
    p.add_argument("--gamma2", type=float, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--Tret", type=float, default=math.sqrt(2) * math.pi)
    p.add_argument("--q0", type=float, default=1.0)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--points", type=int, default=1001)

    p = sub.add_parser("fig-repro", help="CSV bundles for the three figures")
    p.add_argument("which", choices=["fig1", "fig2", "fig3"])
    return parser


def run(args) -> None:
    config = load_config(args.config) if args.config else default_config()
    if args.parallel < 1:
        raise ConfigError("--parallel must be at least 1")
    if args.command == "toy":
        tp = analytic.ToyModelParams(args.gamma1, args.gamma2, args.Tret, args.omega,
                                     args.q0, args.v0)
        path = pipeline.toy(args.out_dir, tp, args.points)
        log.info("wrote %s (%s)", path, analytic.heating_sign(tp))
        return
    if args.command == "fig-repro":
        out = pipeline.fig_repro(args.which, config, args.out_dir, args.parallel)
        log.info("wrote bundle %s", out)
        return

    st = pipeline.Stage(config, args.out_dir, args.parallel)
    cmd = args.command
    if cmd == "groundstate":
        written = [pipeline.groundstate(st, args.out, args.n)]
    elif cmd == "correlate":
        written = [pipeline.correlate(st, args.t_final, args.checkpoint)]
    elif cmd == "kernel":
        written = list(pipeline.kernel(st))
    elif cmd == "spectral":
        written = [pipeline.spectral(st)]
    elif cmd == "dynamics":
        written = [pipeline.run_dynamics(st, args.omega, args.t_final, args.kernel,
                                         args.q0, args.v0)]
    elif cmd == "ratesweep":
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        written = [pipeline.ratesweep(st, _omega_grid(args), methods, args.t_final)]
    elif cmd == "analytic":
        written = [pipeline.analytic_rates(st, _omega_grid(args), args.mu, args.out)]
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"unknown command {cmd}")
    for path in written:
        log.info("wrote %s", path)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        run(args)
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
