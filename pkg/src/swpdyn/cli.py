"""Command-line driver: ``swpdyn <command> [--config FILE] [--out DIR] ...``.

Exit codes: 0 success, 1 validation failure, 2 configuration or I/O error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .core import NumericalError, eval_packet_grid, quadrature_grid
from .dynamics import ReducedState
from .egorov import EgorovSeries, egorov_expectations, sample_ensemble
from .integrators import IntegratorSpec, Method, Trajectory, propagate
from .output import svg_line_plot, write_egorov, write_energies, write_packet, write_trajectory
from .validation import SUITES, run_suites

__all__ = ["main", "run_classical", "run_semiclassical", "run_egorov", "run_compare",
           "run_packet_eval", "run_validate"]

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = cfg.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def run_classical(cfg: ExperimentConfig) -> Trajectory:
    spec = IntegratorSpec(Method.STORMER_VERLET, cfg.integrator.dt, cfg.integrator.t_final)
    return propagate(cfg.model, spec, (cfg.initial.q, cfg.initial.p))


def run_semiclassical(cfg: ExperimentConfig) -> Trajectory:
    if cfg.integrator.method is Method.STORMER_VERLET:
        raise ConfigError("integrator.method must be variational_splitting or rk4 for the "
                          "semiclassical run")
    return propagate(cfg.model, cfg.integrator, ReducedState.from_packet(cfg.initial, cfg.model.n))


def run_egorov(cfg: ExperimentConfig) -> EgorovSeries:
    ens = sample_ensemble(cfg.model, cfg.initial, cfg.model.n, cfg.samples, cfg.seed, cfg.scheme)
    spec = IntegratorSpec(Method.STORMER_VERLET, cfg.integrator.dt, cfg.integrator.t_final)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        series = egorov_expectations(cfg.model, ens, spec)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return series


def run_compare(cfg: ExperimentConfig) -> list[Path]:
    """Classical, semiclassical and Egorov runs with CSV (and optional SVG) output."""
    out = _out_dir(cfg)
    d = cfg.model.d
    cl = run_classical(cfg)
    sc = run_semiclassical(cfg)
    eg = run_egorov(cfg)
    files = [
        write_trajectory(out / "classical.csv", cl, d),
        write_trajectory(out / "semiclassical.csv", sc, d),
        write_egorov(out / "egorov.csv", eg),
        write_energies(out / "energies.csv", sc.times,
                       {"classical": cl.energy, "semiclassical": sc.energy,
                        "egorov": eg.mean_energy}),
    ]
    if cfg.plots:
        files.append(svg_line_plot(
            out / "phase_space.svg",
            {"classical": (cl.q[:, 0], cl.p[:, 0]), "semiclassical": (sc.q[:, 0], sc.p[:, 0]),
             "Egorov": (eg.mean_x[:, 0], eg.mean_p[:, 0])},
            f"phase space, hbar = {cfg.model.hbar:g}, n = {cfg.model.n.entries}", "q", "p"))
        files.append(svg_line_plot(
            out / "energy.svg",
            {"classical": (cl.times, cl.energy), "semiclassical": (sc.times, sc.energy),
             "Egorov": (eg.times, eg.mean_energy)},
            "total energy", "t", "energy"))
    return files


def run_packet_eval(cfg: ExperimentConfig) -> Path:
    if cfg.model.d != 1:
        raise ConfigError("packet-eval writes 1-D grids only")
    out = _out_dir(cfg)
    x = quadrature_grid(cfg.initial, cfg.model.n, cfg.model.hbar, points=cfg.packet_points)
    values = eval_packet_grid(cfg.initial, cfg.model.n, cfg.model.hbar, x)
    return write_packet(out / "packet.csv", x, values)


def run_validate(names=None, stream=None) -> bool:
    stream = sys.stdout if stream is None else stream
    results = run_suites(names)
    for r in results:
        print(r.line(), file=stream)
    ok = all(r.passed for r in results)
    print("all suites passed" if ok else "validation FAILED", file=stream)
    return ok


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swpdyn",
                                     description="Semiclassical wave packet dynamics experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("classical", "classical Stormer-Verlet trajectory"),
                       ("semiclassical", "reduced semiclassical packet trajectory"),
                       ("egorov", "Egorov expectation values from a sampled ensemble"),
                       ("compare", "all three runs plus energies and plots"),
                       ("packet-eval", "dump the initial packet on a grid")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="configuration file (defaults if omitted)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="Egorov sampling seed")
        p.add_argument("--plots", action="store_true", help="also write SVG plots")
        p.add_argument("--reproducible", action="store_true",
                       help="deterministic reductions (always on: single fixed summation order)")
    v = sub.add_parser("validate", help="run the invariant suites")
    v.add_argument("--suite", action="append", choices=list(SUITES),
                   help="run only the named suite (repeatable)")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ConfigError("--seed must fit in an unsigned 64-bit integer")
    return cfg.with_overrides(out_dir=args.out, seed=args.seed, plots=args.plots)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return EXIT_OK if run_validate(args.suite) else EXIT_VALIDATION
        cfg = _load(args)
        d = cfg.model.d
        if args.command == "classical":
            path = write_trajectory(_out_dir(cfg) / "classical.csv", run_classical(cfg), d)
            files = [path]
        elif args.command == "semiclassical":
            traj = run_semiclassical(cfg)
            files = [write_trajectory(_out_dir(cfg) / "semiclassical.csv", traj, d)]
        elif args.command == "egorov":
            files = [write_egorov(_out_dir(cfg) / "egorov.csv", run_egorov(cfg))]
        elif args.command == "compare":
            files = run_compare(cfg)
        else:
            files = [run_packet_eval(cfg)]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
