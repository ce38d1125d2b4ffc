"""Command-line driver.

Subcommands: solve, verify, norm, series, potentials-selftest.
Global flags: --config PATH, --out DIR, --seed N, --threads N (0 = auto,
environment variable LAYERFLOW_THREADS as fallback).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import spectral
from .analysis import ProhibitedWeightError, abel_coefficients, series_laplacian_fd
from .holder import anisotropic_norm, spatial_norm
from .io import ConfigError, FieldFormatError, RunConfig, parse_config, read_field, \
    write_csv, write_field
from .nse import ReducedSolveError, energy_report, nse_residual, recover_pressure, \
    recover_velocity, solve_nse, FlowState
from .verify import potentials_selftest, run_checks

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_NOT_CONVERGED = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layerflow")
    parser.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="corpus seed override")
    parser.add_argument("--threads", type=int, default=None,
                        help="transform workers (0 = auto); LAYERFLOW_THREADS as fallback")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the reduced-equation solver on field files")
    p_solve.add_argument("forcing", type=Path, help="time-dependent 1-form file (LFF1)")
    p_solve.add_argument("initial", type=Path, help="static 1-form file (LFF1)")

    p_verify = sub.add_parser("verify", help="run the identity/property suite")
    p_verify.add_argument("--debug-flip-codifferential", action="store_true",
                          help="mutation control: flip the codifferential sign")

    p_norm = sub.add_parser("norm", help="weighted norm report of a field file")
    p_norm.add_argument("field", type=Path)

    p_series = sub.add_parser("series", help="series coefficients and residual table")
    p_series.add_argument("--n", type=int, default=3)
    p_series.add_argument("--delta", type=float, default=1.5)
    p_series.add_argument("--K", type=int, default=60)

    sub.add_parser("potentials-selftest", help="potential-machinery checks")
    return parser


def _resolve_threads(args) -> None:
    threads = args.threads
    if threads is None:
        env = os.environ.get("LAYERFLOW_THREADS")
        threads = int(env) if env else 1
    spectral.set_workers(threads)


def _load_config(args) -> RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = str(args.out)
    return parse_config(args.config, overrides)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out) if cfg.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_checks(results) -> int:
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        rel = {"<=": "<=", ">=": ">=", "range": "in 2.0+-"}[r.comparator]
        print(f"{r.name:<{width}}  value={r.value:.6e}  threshold {rel} {r.threshold:.3e}  {status}")
        failures += 0 if r.passed else 1
    return failures


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    forcing = read_field(args.forcing, cfg.grid)
    initial = read_field(args.initial, cfg.grid)
    if forcing.degree != 1 or not forcing.time_dependent:
        raise FieldFormatError("q: forcing must be a time-dependent 1-form")
    if initial.degree != 1 or initial.time_dependent:
        raise FieldFormatError("q: initial data must be a static 1-form")
    exit_code = EXIT_OK
    try:
        state = solve_nse(forcing, initial, cfg.solver)
    except ReducedSolveError as err:
        print(f"solver did not converge: {err}", file=sys.stderr)
        g = err.last_g
        u = recover_velocity(g, cfg.potential)
        p = recover_pressure(u, forcing, cfg.potential)
        state = FlowState(u=u, p=p, g=g, f=forcing, u0=initial,
                          diagnostics={"iterations": err.history, "mu": cfg.potential.mu})
        state.diagnostics["residuals"] = nse_residual(state, forcing, initial,
                                                      cfg.potential.mu)
        exit_code = EXIT_NOT_CONVERGED
    write_field(out / "u.lff", state.u)
    write_field(out / "p.lff", state.p)
    write_field(out / "g.lff", state.g)
    res = state.diagnostics["residuals"]
    times = cfg.grid.times()
    rows = []
    for j, t in enumerate(times):
        rows.append(("momentum", j, t, res["momentum_sup"][j], res["momentum_l2"][j]))
        rows.append(("divergence", j, t, res["divergence_sup"][j], res["divergence_l2"][j]))
    rows.append(("initial", 0, 0.0, res["initial_sup"], res["initial_l2"]))
    write_csv(out / "residuals.csv", ("check", "slice", "t", "sup", "l2"), rows)
    energy = energy_report(state.u, forcing, cfg.potential.mu)
    write_csv(out / "energy.csv", ("slice", "t", "energy", "dissipation", "power", "defect"),
              [(j, energy["t"][j], energy["energy"][j], energy["dissipation"][j],
                energy["power"][j], energy["defect"][j]) for j in range(len(times))])
    write_csv(out / "iterations.csv", ("iteration", "residual", "damping"),
              [(h["iteration"], h["residual"], h["damping"])
               for h in state.diagnostics["iterations"]])
    return exit_code


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    results = run_checks(cfg, flip_codifferential=args.debug_flip_codifferential)
    failures = _print_checks(results)
    return EXIT_OK if failures == 0 else EXIT_NOT_CONVERGED


def cmd_norm(args) -> int:
    cfg = _load_config(args)
    field = read_field(args.field)
    report = anisotropic_norm(field, cfg.norms) if field.time_dependent \
        else spatial_norm(field, cfg.norms)
    rows = [(label, value) for label, value in sorted(report.breakdown.items())]
    rows.append(("total", report.total))
    rows.append(("pairs_sampled", report.pairs_sampled))
    out = _out_dir(cfg)
    write_csv(out / "norm.csv", ("term", "value"), rows)
    for label, value in rows:
        print(f"{label},{value}")
    return EXIT_OK


def cmd_series(args) -> int:
    cfg = _load_config(args)
    series = abel_coefficients(args.n, args.delta, args.K)
    rows = [("a", k, c) for k, c in enumerate(series.coeffs)]
    for r in np.linspace(1.0, 3.0, 9):
        x = np.zeros(args.n)
        x[0] = r
        lap = series_laplacian_fd(series, x)
        target = (1.0 + r * r) ** (-(args.delta + 2.0) / 2.0)
        rows.append(("residual", r, abs(lap - target)))
    out = _out_dir(cfg)
    write_csv(out / "series.csv", ("kind", "index", "value"), rows)
    for kind, idx, val in rows:
        print(f"{kind},{idx},{val}")
    return EXIT_OK


def cmd_potentials_selftest(args) -> int:
    cfg = _load_config(args)
    results = potentials_selftest(cfg)
    failures = _print_checks(results)
    return EXIT_OK if failures == 0 else EXIT_NOT_CONVERGED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _resolve_threads(args)
    handlers = {
        "solve": cmd_solve,
        "verify": cmd_verify,
        "norm": cmd_norm,
        "series": cmd_series,
        "potentials-selftest": cmd_potentials_selftest,
    }
    try:
        return handlers[args.command](args)
    except (FieldFormatError, ConfigError, ProhibitedWeightError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
