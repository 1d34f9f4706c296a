"""Command-line driver.

Subcommands: ``run`` (simulate a preset or config file), ``verify`` (batch
coefficient-structure checks), and ``presets`` (list built-ins). Exit codes:
0 success, 1 configuration error, 2 solver failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import PRESETS, get_config
from .errors import ConfigError, SolverError
from .runner import run, verify

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbmix",
        description="Multi-species Lenard-Bernstein collision solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a preset or JSON config")
    p_run.add_argument("config", help="preset name or path to a JSON config file")
    p_run.add_argument("--out", default=".", metavar="DIR", help="directory for CSV/SVG artifacts")
    p_run.add_argument("--mode", choices=["grid", "moments"], help="override the configured mode")
    p_run.add_argument("--dt", type=float, help="override the time step")
    p_run.add_argument("--t-end", type=float, dest="t_end", help="override the final time")

    p_verify = sub.add_parser("verify", help="check the coefficient structure of a configuration")
    p_verify.add_argument("config", help="preset name or path to a JSON config file")

    sub.add_parser("presets", help="list the built-in presets")
    return parser


def _cmd_run(args) -> int:
    config = get_config(args.config).with_overrides(mode=args.mode, dt=args.dt, t_end=args.t_end)
    result = run(config, out_dir=args.out)
    print(f"run '{config.name}' ({result.mode} mode) finished in {result.runtime:.3f} s")
    print(f"  equilibrium: u_inf = {result.u_inf:.10g}, T_inf = {result.T_inf:.10g}")
    for i in range(config.n_species):
        print(
            f"  species {i + 1}: u = {result.final_u[i]: .10g}  "
            f"T = {result.final_T[i]:.10g}  "
            f"(|u - u_inf| = {abs(result.final_u[i] - result.u_inf):.3e}, "
            f"|T - T_inf| = {abs(result.final_T[i] - result.T_inf):.3e})"
        )
    print(f"  max entropy increase over a step: {result.max_entropy_increase:.3e}")
    print(
        "  max conservation residuals: "
        f"mass {result.max_mass_residual:.3e}, "
        f"momentum {result.max_momentum_residual:.3e}, "
        f"energy {result.max_energy_residual:.3e}"
    )
    if result.max_moment_drift:
        print(f"  max grid/moment drift: {result.max_moment_drift:.3e}")
    if result.csv_path is not None:
        print(f"  wrote {result.csv_path}")
    if result.plot_path is not None:
        print(f"  wrote {result.plot_path}")
    return 0


def _cmd_verify(args) -> int:
    config = get_config(args.config)
    report = verify(config)
    width = max(len(r.name) for r in report.rows)
    for row in report.rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"  [{status}] {row.name:<{width}}  {row.detail}")
    if not report.all_passed:
        print("verification failed", file=sys.stderr)
        return 3
    print("all checks passed")
    return 0


def _cmd_presets() -> int:
    for name, cfg in sorted(PRESETS.items()):
        masses = ", ".join(f"{s.mass:g}" for s in cfg.species)
        print(
            f"  {name}: {cfg.n_species} species (m = {masses}), "
            f"kappa = {cfg.kappa[0, 0]:g}, v in [-{cfg.v_max:g}, {cfg.v_max:g}], "
            f"N_v = {cfg.n_cells}, dt = {cfg.dt:g}, t_end = {cfg.t_end:g}"
        )
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_presets()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
