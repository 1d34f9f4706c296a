"""Experiment orchestration: drive a configured run, emit CSV/SVG artifacts,
and batch-verify the coefficient structure of a configuration."""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SimConfig
from .errors import ConfigError
from .kinetics import build_grid
from .mixture import (
    build_coefficients,
    check_pirner_conditions,
    check_weight_bounds,
    max_symmetry_residual,
)
from .moments import (
    MomentSet,
    coulomb_relaxation_rates,
    equilibrium_state,
    integrate_moments,
    pair_relaxation_rates,
)
from .solver import MomentDriftWarning, entropy, full_step, initial_state, maxwellian_entropy

__all__ = ["RunResult", "CheckRow", "VerifyReport", "run", "verify"]

_CSV_FLOAT = "%.17g"


@dataclass
class RunResult:
    """Recorded trajectory plus summary diagnostics of one run."""

    config: SimConfig
    mode: str
    times: np.ndarray
    u: np.ndarray  # (M, N)
    T: np.ndarray  # (M, N)
    n: np.ndarray  # (N,)
    energy: np.ndarray  # (M, N)
    entropy: np.ndarray  # (M,)
    gst_iterations: np.ndarray  # (M,)
    mass_residual: np.ndarray  # (M,)
    momentum_residual: np.ndarray  # (M,)
    energy_residual: np.ndarray  # (M,)
    u_inf: float
    T_inf: float
    final_u: np.ndarray
    final_T: np.ndarray
    max_entropy_increase: float
    max_mass_residual: float
    max_momentum_residual: float
    max_energy_residual: float
    max_moment_drift: float
    runtime: float
    csv_path: Path | None = None
    plot_path: Path | None = None


def _resolve_paths(config: SimConfig, out_dir: str | Path | None) -> tuple[Path | None, Path | None]:
    csv_path = Path(config.csv_path) if config.csv_path else None
    plot_path = Path(config.plot_path) if config.plot_path else None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if csv_path is None:
            csv_path = out / f"{config.name}.csv"
        elif not csv_path.is_absolute():
            csv_path = out / csv_path
        if plot_path is None:
            plot_path = out / f"{config.name}.svg"
        elif not plot_path.is_absolute():
            plot_path = out / plot_path
    return csv_path, plot_path


def _csv_header(n_species: int) -> list[str]:
    cols = ["t"]
    cols += [f"u_{i + 1}" for i in range(n_species)]
    cols += [f"T_{i + 1}" for i in range(n_species)]
    cols += [f"n_{i + 1}" for i in range(n_species)]
    cols += [f"E_{i + 1}" for i in range(n_species)]
    cols += [
        "H", "total_momentum", "total_energy", "gst_iterations",
        "mass_residual", "momentum_residual", "energy_residual",
    ]
    return cols


def _format_row(values) -> list[str]:
    out = []
    for v in values:
        if isinstance(v, (int, np.integer)):
            out.append(str(int(v)))
        else:
            out.append(_CSV_FLOAT % float(v))
    return out


def _n_steps(t_end: float, dt: float) -> int:
    return int(np.floor(t_end / dt + 1e-9))


def run(config: SimConfig, out_dir: str | Path | None = None) -> RunResult:
    """Execute one configured run and write its artifacts.

    The CSV (written when a path is configured or ``out_dir`` is given) holds
    one row per ``stride`` steps, flushed as the run progresses so a solver
    failure leaves the rows up to the failing step on disk. The SVG shows the
    per-species velocity and temperature histories against the invariant
    equilibrium levels.
    """
    csv_path, plot_path = _resolve_paths(config, out_dir)
    start = time.perf_counter()
    if config.mode == "grid":
        result = _run_grid(config, csv_path)
    else:
        result = _run_moments(config, csv_path)
    result.runtime = time.perf_counter() - start
    if plot_path is not None:
        _write_plot(result, plot_path)
        result.plot_path = plot_path
    return result


def _run_grid(config: SimConfig, csv_path: Path | None) -> RunResult:
    species = config.species_set()
    grid = build_grid(config.v_max, config.n_cells)
    state = initial_state(species, grid, config.kappa, config.u0, config.T0)
    n_steps = _n_steps(config.t_end, config.dt)
    u_inf, T_inf = equilibrium_state(state.moments)

    mom0 = state.moments
    mass0 = grid.h * state.dist.values.sum(axis=1)
    p0 = float((mom0.rho[:, None] * mom0.u).sum())
    p_scale = max(abs(p0), float((mom0.rho * np.abs(mom0.u[:, 0])).sum()), 1e-300)
    e0 = float(mom0.energy.sum())

    rows: list[list[float]] = []
    H_prev = entropy(state.dist)
    max_dH = -np.inf
    max_drift = 0.0
    drift_flag_time: float | None = None
    summaries = dict(mass=0.0, mom=0.0, energy=0.0)

    def residuals(mass, p, e):
        r_mass = float(np.max(np.abs(mass - mass0) / mass0))
        r_p = abs(p - p0) / p_scale
        r_e = abs(e - e0) / abs(e0)
        summaries["mass"] = max(summaries["mass"], r_mass)
        summaries["mom"] = max(summaries["mom"], r_p)
        summaries["energy"] = max(summaries["energy"], r_e)
        return r_mass, r_p, r_e

    def record(t, mom, H, iters, res):
        rows.append(
            [t, *mom.u[:, 0], *mom.T, *mom.n, *mom.energy, H,
             float((mom.rho[:, None] * mom.u).sum()), float(mom.energy.sum()),
             iters, *res]
        )

    writer = None
    fh = None
    try:
        if csv_path is not None:
            csv_path.parent.mkdir(parents=True, exist_ok=True)
            fh = open(csv_path, "w", newline="")
            writer = csv.writer(fh)
            writer.writerow(_csv_header(config.n_species))
        record(0.0, mom0, H_prev, 0, residuals(mass0, p0, e0))
        if writer is not None:
            writer.writerow(_format_row(rows[-1]))
            fh.flush()
        for step in range(1, n_steps + 1):
            state, diag = full_step(
                state,
                config.dt,
                gst_tol=config.gst_tol,
                gst_max_iter=config.gst_max_iter,
                drift_threshold=config.drift_threshold,
            )
            max_dH = max(max_dH, diag.entropy - H_prev)
            H_prev = diag.entropy
            if diag.moment_drift > max_drift:
                max_drift = diag.moment_drift
                if diag.drift_flagged:
                    drift_flag_time = diag.time
            res = residuals(diag.mass, diag.total_momentum, diag.total_energy)
            if step % config.stride == 0:
                record(step * config.dt, state.moments, diag.entropy, diag.gst_iterations, res)
                if writer is not None:
                    writer.writerow(_format_row(rows[-1]))
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()

    if drift_flag_time is not None:
        warnings.warn(
            f"grid moments drifted up to {max_drift:.3e} (relative) from the "
            f"moment-update values, first peaking near t = {drift_flag_time:.6g}; "
            f"threshold {config.drift_threshold:.1e}. This measures the "
            "velocity-domain truncation of the discrete collision operator.",
            MomentDriftWarning,
            stacklevel=2,
        )

    data = np.array(rows)
    N = config.n_species
    return RunResult(
        config=config,
        mode="grid",
        times=data[:, 0],
        u=data[:, 1 : 1 + N],
        T=data[:, 1 + N : 1 + 2 * N],
        n=mom0.n,
        energy=data[:, 1 + 3 * N : 1 + 4 * N],
        entropy=data[:, 1 + 4 * N],
        gst_iterations=data[:, 4 + 4 * N].astype(int),
        mass_residual=data[:, 5 + 4 * N],
        momentum_residual=data[:, 6 + 4 * N],
        energy_residual=data[:, 7 + 4 * N],
        u_inf=float(u_inf[0]),
        T_inf=T_inf,
        final_u=state.moments.u[:, 0].copy(),
        final_T=state.moments.T.copy(),
        max_entropy_increase=float(max_dH),
        max_mass_residual=summaries["mass"],
        max_momentum_residual=summaries["mom"],
        max_energy_residual=summaries["energy"],
        max_moment_drift=max_drift,
        runtime=0.0,
        csv_path=csv_path,
    )


def _run_moments(config: SimConfig, csv_path: Path | None) -> RunResult:
    species = config.species_set()
    ratio = config.dt / config.dt_ref
    rec = max(1, int(round(ratio)))
    if abs(ratio - rec) > 1e-9 * rec:
        raise ConfigError(
            f"time.dt = {config.dt} must be an integer multiple of "
            f"solver.dt_ref = {config.dt_ref} in moments mode"
        )
    mom0 = MomentSet(n=species.densities, u=config.u0, T=config.T0, mass=species.masses)
    u_inf, T_inf = equilibrium_state(mom0)
    traj = integrate_moments(
        mom0, species, config.kappa, config.t_end, dt=config.dt_ref, record_every=rec
    )

    p0 = float(traj.total_momentum[0, 0])
    p_scale = max(abs(p0), float((mom0.rho * np.abs(mom0.u[:, 0])).sum()), 1e-300)
    e0 = float(traj.total_energy[0])

    rows = []
    max_dH = -np.inf
    H_prev = None
    summaries = dict(mom=0.0, energy=0.0)
    keep = []
    for k, t in enumerate(traj.times):
        step_index = int(round(t / config.dt_ref))
        if step_index % rec != 0:
            continue  # trailing sample of a t_end not aligned with dt
        sample = step_index // rec
        mom = traj.moments_at(k)
        H = maxwellian_entropy(mom)
        if H_prev is not None:
            max_dH = max(max_dH, H - H_prev)
        H_prev = H
        r_p = abs(float(traj.total_momentum[k, 0]) - p0) / p_scale
        r_e = abs(float(traj.total_energy[k]) - e0) / abs(e0)
        summaries["mom"] = max(summaries["mom"], r_p)
        summaries["energy"] = max(summaries["energy"], r_e)
        if sample % config.stride != 0:
            continue
        keep.append(k)
        rows.append(
            [t, *mom.u[:, 0], *mom.T, *mom.n, *mom.energy, H,
             float(traj.total_momentum[k, 0]), float(traj.total_energy[k]),
             0, 0.0, r_p, r_e]
        )

    if csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_csv_header(config.n_species))
            for row in rows:
                writer.writerow(_format_row(row))

    data = np.array(rows)
    N = config.n_species
    return RunResult(
        config=config,
        mode="moments",
        times=data[:, 0],
        u=data[:, 1 : 1 + N],
        T=data[:, 1 + N : 1 + 2 * N],
        n=mom0.n,
        energy=data[:, 1 + 3 * N : 1 + 4 * N],
        entropy=data[:, 1 + 4 * N],
        gst_iterations=np.zeros(len(rows), dtype=int),
        mass_residual=np.zeros(len(rows)),
        momentum_residual=data[:, 6 + 4 * N],
        energy_residual=data[:, 7 + 4 * N],
        u_inf=float(u_inf[0]),
        T_inf=T_inf,
        final_u=traj.final.u[:, 0].copy(),
        final_T=traj.final.T.copy(),
        max_entropy_increase=float(max_dH),
        max_mass_residual=0.0,
        max_momentum_residual=summaries["mom"],
        max_energy_residual=summaries["energy"],
        max_moment_drift=0.0,
        runtime=0.0,
        csv_path=csv_path,
    )


def _write_plot(result: RunResult, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    path.parent.mkdir(parents=True, exist_ok=True)
    fig, (ax_u, ax_T) = plt.subplots(1, 2, figsize=(10, 4))
    for i in range(result.u.shape[1]):
        ax_u.plot(result.times, result.u[:, i], label=f"species {i + 1}")
        ax_T.plot(result.times, result.T[:, i], label=f"species {i + 1}")
    ax_u.axhline(result.u_inf, color="k", linestyle="--", linewidth=1, label="equilibrium")
    ax_T.axhline(result.T_inf, color="k", linestyle="--", linewidth=1, label="equilibrium")
    ax_u.set_xlabel("t")
    ax_u.set_ylabel("bulk velocity")
    ax_T.set_xlabel("t")
    ax_T.set_ylabel("temperature")
    ax_u.legend()
    ax_T.legend()
    fig.suptitle(result.config.name)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# structural verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckRow:
    name: str
    passed: bool
    detail: str


@dataclass
class VerifyReport:
    rows: list[CheckRow] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)


_CHECK_TOL = 1e-12


def verify(config: SimConfig) -> VerifyReport:
    """Run the coefficient-structure checks for a configuration.

    Checks, at the configured initial state: the admissibility bounds on the
    mixture weights, the three conservation symmetries, equality of the model
    relaxation rates with the Coulomb rates, and (for two species) the Pirner
    sufficient conditions. The Pirner inequalities are sufficient rather than
    necessary, so that row gates on the implication "conditions imply the
    bounds" and reports how many of the five inequalities hold.
    """
    species = config.species_set()
    mom = MomentSet(n=species.densities, u=config.u0, T=config.T0, mass=species.masses)
    table = build_coefficients(species, mom.T, config.kappa)
    report = VerifyReport()

    ok, violations = check_weight_bounds(table)
    report.rows.append(
        CheckRow("weight-bounds", ok, "all pairs admissible" if ok else "; ".join(violations))
    )

    sym = max_symmetry_residual(table)
    report.rows.append(
        CheckRow("conservation-symmetries", sym <= _CHECK_TOL, f"max relative residual {sym:.3e}")
    )

    floor = 1e-300
    r_mom = 0.0
    r_temp = 0.0
    for i in range(len(species)):
        for j in range(i + 1, len(species)):
            for a, b in ((i, j), (j, i)):
                model_m, model_t = pair_relaxation_rates(mom, table, a, b)
                ref_m, ref_t = coulomb_relaxation_rates(mom, species, a, b)
                sm = max(np.abs(model_m).max(), np.abs(ref_m).max(), floor)
                # the temperature rate can be a near-cancelling difference of
                # its two terms; measure the mismatch against their magnitude
                du = mom.u[b] - mom.u[a]
                terms = table.xi[a, b] * (
                    mom.dim * abs(mom.T[b] - mom.T[a])
                    + 0.5 * abs(mom.mass[b] - mom.mass[a]) * float(du @ du)
                )
                st = max(abs(model_t), abs(ref_t), terms, floor)
                r_mom = max(r_mom, float(np.abs(model_m - ref_m).max()) / sm)
                r_temp = max(r_temp, abs(model_t - ref_t) / st)
    report.rows.append(
        CheckRow("matching-momentum", r_mom <= _CHECK_TOL, f"max relative residual {r_mom:.3e}")
    )
    report.rows.append(
        CheckRow("matching-temperature", r_temp <= _CHECK_TOL, f"max relative residual {r_temp:.3e}")
    )

    if len(species) == 2:
        pr = check_pirner_conditions(table)
        held = sum(pr.conditions.values())
        detail = f"{held}/5 sufficient conditions hold (eps = {pr.epsilon:.6g})"
        if pr.all_conditions_hold:
            detail += "; admissibility bounds follow"
        report.rows.append(CheckRow("pirner-implication", pr.implication_ok, detail))
    return report
