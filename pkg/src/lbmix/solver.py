"""Implicit time stepping for the multi-species collision model.

One backward-Euler step splits into two stages. First the coupled moment
update is solved by a Gauss-Seidel type fixed-point iteration: with the
collision frequencies frozen at the current iterate, the momentum equations
are linear in all bulk velocities and the energy equations are then linear in
all temperatures, so each pass costs two small dense solves; the frequencies
are refreshed from the new temperatures and the pass repeats until the
iterate stops moving. Second, with the updated moments fixed, each species'
distribution is advanced through a tridiagonal linear solve built from the
mixture Maxwellians.

The velocity discretization is the conservative central-difference form

    [L f]_k = ( a_{k-1} f_{k-1} - b_k f_k + c_{k+1} f_{k+1} ) / h^2

with half-point averages M_{k+1/2} = (M_k + M_{k+1}) / 2 and the boundary
faces M_{1/2} = M_{N+1/2} = 0 (no flux through the velocity-domain edges).
Because each column of the operator sums to zero, the discrete mass of every
species is conserved to rounding by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .kinetics import DistributionSet, SpeciesSet, VelocityGrid, log_maxwellian, moments_of
from .mixture import (
    RATE_PREFACTOR,
    build_coefficients,
    mixture_state,
    validate_kappa,
)
from .moments import MomentSet

__all__ = [
    "TridiagonalOperator",
    "MomentUpdateResult",
    "SimulationState",
    "StepDiagnostics",
    "MomentDriftWarning",
    "assemble_collision_operator",
    "assemble_collision_operator_from_log",
    "thomas_solve",
    "implicit_collision_solve",
    "implicit_moment_update",
    "backward_euler_residual",
    "entropy",
    "maxwellian_entropy",
    "initial_state",
    "full_step",
]


class MomentDriftWarning(UserWarning):
    """Moments of the gridded distributions drifted from the moment-update values."""


# ---------------------------------------------------------------------------
# tridiagonal collision operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TridiagonalOperator:
    """Tridiagonal matrix G with row k acting as b_k f_k - a_{k-1} f_{k-1} - c_{k+1} f_{k+1}.

    Stored as ``sub`` (a, length N-1, entry j multiplies f_j in row j+1),
    ``diag`` (b, length N), and ``sup`` (c, length N-1, entry j multiplies
    f_{j+1} in row j). The diagonal is assembled as the sum of the same
    face-over-cell ratios that appear off-diagonal, so every column sums to
    zero up to rounding and the operator conserves discrete mass.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        out = self.diag * f
        out[1:] -= self.sub * f[:-1]
        out[:-1] -= self.sup * f[1:]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) - np.diag(self.sub, -1) - np.diag(self.sup, 1)


def _assemble_from_ratios(r: np.ndarray, s: np.ndarray) -> TridiagonalOperator:
    # r_k = M_{k+1}/M_k and s_k = M_k/M_{k+1} at the interior faces
    sub = 0.5 * (1.0 + r)
    sup = 0.5 * (s + 1.0)
    diag = np.zeros(r.size + 1)
    diag[:-1] += sub
    diag[1:] += sup
    return TridiagonalOperator(sub=sub, diag=diag, sup=sup)


def assemble_collision_operator(M: np.ndarray) -> TridiagonalOperator:
    """Build G from the kernel values M at the cell centers.

        a_{k-1} = (M_{k-1} + M_k) / (2 M_{k-1})
        b_k     = (M_{k-1} + 2 M_k + M_{k+1}) / (2 M_k)   interior
        c_{k+1} = (M_k + M_{k+1}) / (2 M_{k+1})
        b_1 = (M_1 + M_2) / (2 M_1),  b_N = (M_{N-1} + M_N) / (2 M_N)

    Rejects non-positive kernel values; evaluate the kernel through its
    exponent (see :func:`assemble_collision_operator_from_log`) when tail
    cells underflow.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 1 or M.size < 4:
        raise ValueError("kernel must be a 1-d array with at least 4 cells")
    if not np.all(M > 0.0):
        k = int(np.argmin(M))
        raise ValueError(
            f"kernel value at cell {k + 1} is not positive ({M[k]}); "
            "the coefficient ratios are undefined"
        )
    return _assemble_from_ratios(M[1:] / M[:-1], M[:-1] / M[1:])


def assemble_collision_operator_from_log(log_M: np.ndarray) -> TridiagonalOperator:
    """Build G from the kernel exponents log M.

    The coefficients only involve ratios of adjacent kernel values, which are
    exponentials of exponent differences; this stays finite far into the tail
    where M itself underflows to zero.
    """
    g = np.asarray(log_M, dtype=float)
    if g.ndim != 1 or g.size < 4:
        raise ValueError("kernel exponent must be a 1-d array with at least 4 cells")
    if not np.all(np.isfinite(g)):
        raise ValueError("kernel exponent must be finite")
    dg = np.diff(g)
    return _assemble_from_ratios(np.exp(dg), np.exp(-dg))


def thomas_solve(
    sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``sub[j]`` multiplies x_j in row j+1 and ``sup[j]`` multiplies x_{j+1} in
    row j (same layout as :class:`TridiagonalOperator`). The systems produced
    by the implicit update are strictly diagonally dominant, so no pivoting
    is needed; a vanishing pivot is reported defensively.
    """
    n = diag.size
    cp = np.empty(n - 1)
    dp = np.empty(n)
    piv = diag[0]
    if piv == 0.0:
        raise SolverError("zero pivot in tridiagonal solve at row 1")
    cp[0] = sup[0] / piv
    dp[0] = rhs[0] / piv
    for k in range(1, n):
        piv = diag[k] - sub[k - 1] * cp[k - 1]
        if piv == 0.0:
            raise SolverError(f"zero pivot in tridiagonal solve at row {k + 1}")
        if k < n - 1:
            cp[k] = sup[k] / piv
        dp[k] = (rhs[k] - sub[k - 1] * dp[k - 1]) / piv
    x = np.empty(n)
    x[-1] = dp[-1]
    for k in range(n - 2, -1, -1):
        x[k] = dp[k] - cp[k] * x[k + 1]
    return x


def implicit_collision_solve(
    f: np.ndarray,
    terms: list[tuple[float, float, TridiagonalOperator]],
    dt: float,
    grid: VelocityGrid,
) -> np.ndarray:
    """Solve (I + dt/h^2 Sum_j lam_j theta_j G_j) f_new = f for one species.

    ``terms`` lists (lam, theta, G) for each collision partner. With no
    active terms the system is the identity and f is returned unchanged.
    """
    f = np.asarray(f, dtype=float)
    nv = grid.n_cells
    diag = np.ones(nv)
    sub = np.zeros(nv - 1)
    sup = np.zeros(nv - 1)
    scale = dt / grid.h**2
    active = False
    for lam, theta, op in terms:
        eta = scale * lam * theta
        if eta == 0.0:
            continue
        active = True
        diag += eta * op.diag
        sub -= eta * op.sub
        sup -= eta * op.sup
    if not active:
        return f.copy()
    return thomas_solve(sub, diag, sup, f)


# ---------------------------------------------------------------------------
# backward-Euler moment update
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentUpdateResult:
    moments: MomentSet
    iterations: int
    residual: float


def _frequency_matrix(species: SpeciesSet, n: np.ndarray, T: np.ndarray, kappa: np.ndarray):
    m = species.masses
    q = species.charges
    xi_const = (
        RATE_PREFACTOR
        / species.eps0**2
        * np.asarray(species.coulomb_log)
        * np.outer(q, q) ** 2
        * np.outer(n, n)
        / np.outer(m, m)
    )
    theta = T / m
    return kappa / n[:, None] * xi_const / (theta[:, None] + theta[None, :]) ** 1.5


def implicit_moment_update(
    mom: MomentSet,
    species: SpeciesSet,
    kappa: np.ndarray,
    dt: float,
    *,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> MomentUpdateResult:
    """Backward-Euler update of the bulk velocities and temperatures.

    Densities are unchanged. Each fixed-point pass freezes the collision
    frequencies at the current temperature iterate, solves the momentum
    equations (linear in all u, one dense N x N solve shared by the velocity
    components), then solves the energy equations (linear in all T once the
    fresh velocity products are known), and finally refreshes the
    frequencies. Iteration stops when the combined relative change of (u, T)
    drops below ``tol``; exhausting ``max_iter`` raises SolverError. The
    update preserves total momentum and total energy to linear-solve
    rounding, independent of the iteration count.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    kappa = np.asarray(kappa, dtype=float)
    m = mom.mass
    n = mom.n
    rho = mom.rho
    d = mom.dim
    validate_kappa(kappa, m)

    mu = (m[:, None] + m[None, :]) / (2.0 * m[:, None])
    one_minus_alpha = mu / kappa
    one_minus_beta = 0.5 / kappa
    np.fill_diagonal(one_minus_alpha, 0.0)
    np.fill_diagonal(one_minus_beta, 0.0)

    u0 = mom.u
    T0 = mom.T
    s0 = mom.speed_squared
    u_it = u0.copy()
    T_it = T0.copy()

    for it in range(1, max_iter + 1):
        lam = _frequency_matrix(species, n, T_it, kappa)

        W = dt * rho[:, None] * lam * one_minus_alpha
        A = np.diag(rho + W.sum(axis=1)) - W
        u_next = np.linalg.solve(A, rho[:, None] * u0)

        s_next = np.einsum("id,id->i", u_next, u_next)
        p = u_next @ u_next.T
        C = 2.0 * dt * n[:, None] * lam * one_minus_beta
        B = np.diag(d * n + d * C.sum(axis=1)) - d * C
        bracket = (
            C * (m[None, :] * (s_next[None, :] - p) - m[:, None] * (s_next[:, None] - p))
        ).sum(axis=1)
        rhs = d * n * T0 - rho * (s_next - s0) + bracket
        T_next = np.linalg.solve(B, rhs)
        if np.any(T_next <= 0.0):
            bad = int(np.argmin(T_next))
            raise SolverError(
                f"moment update produced non-positive temperature for species "
                f"{bad + 1} at iteration {it} (T = {T_next[bad]:.6e}); "
                "the time step is too aggressive for this state"
            )

        change = max(np.abs(u_next - u_it).max(), np.abs(T_next - T_it).max())
        scale = max(np.abs(u_next).max(), np.abs(T_next).max(), 1e-300)
        u_it, T_it = u_next, T_next
        residual = change / scale
        if residual <= tol:
            return MomentUpdateResult(
                moments=MomentSet(n.copy(), u_it, T_it, m.copy()),
                iterations=it,
                residual=residual,
            )

    raise SolverError(
        f"moment update did not converge within {max_iter} iterations "
        f"(last relative change {residual:.3e}, tol {tol:.3e})"
    )


def backward_euler_residual(
    mom_old: MomentSet,
    mom_new: MomentSet,
    species: SpeciesSet,
    kappa: np.ndarray,
    dt: float,
) -> float:
    """Scaled residual of the backward-Euler moment equations at ``mom_new``.

    Frequencies are evaluated at the new temperatures, so a converged update
    should push this down to source-term rounding.
    """
    kappa = np.asarray(kappa, dtype=float)
    m = mom_new.mass
    n = mom_new.n
    rho = mom_new.rho
    d = mom_new.dim
    lam = _frequency_matrix(species, n, mom_new.T, kappa)
    mu = (m[:, None] + m[None, :]) / (2.0 * m[:, None])
    one_minus_alpha = mu / kappa
    one_minus_beta = 0.5 / kappa
    np.fill_diagonal(one_minus_alpha, 0.0)
    np.fill_diagonal(one_minus_beta, 0.0)

    u1, T1 = mom_new.u, mom_new.T
    W = dt * rho[:, None] * lam * one_minus_alpha
    r_u = rho[:, None] * (u1 - mom_old.u) - (W @ u1 - W.sum(axis=1)[:, None] * u1)

    s1 = mom_new.speed_squared
    p = u1 @ u1.T
    C = 2.0 * dt * n[:, None] * lam * one_minus_beta
    bracket = (
        C * (m[None, :] * (s1[None, :] - p) - m[:, None] * (s1[:, None] - p))
    ).sum(axis=1)
    r_T = (
        rho * (s1 - mom_old.speed_squared)
        + d * n * (T1 - mom_old.T)
        - d * (C @ T1 - C.sum(axis=1) * T1)
        - bracket
    )
    scale = max(np.abs(rho[:, None] * u1).max(), (n * T1).max(), 1e-300)
    return max(np.abs(r_u).max(), np.abs(r_T).max()) / scale


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def entropy(dist: DistributionSet) -> float:
    """Total entropy H = Sum_i h Sum_k (f_ik log f_ik - f_ik).

    Requires strictly positive distribution values; a non-positive cell is a
    solver defect and is reported rather than clamped.
    """
    f = dist.values
    if not np.all(f > 0.0):
        i, k = np.unravel_index(int(np.argmin(f)), f.shape)
        raise ValueError(
            f"entropy undefined: species {i + 1} has non-positive value "
            f"{f[i, k]} at cell {k + 1}"
        )
    return float(dist.grid.h * (f * np.log(f) - f).sum())


def maxwellian_entropy(mom: MomentSet) -> float:
    """Entropy of the Maxwellians carrying the given moments.

        H = Sum_i n_i [ log n_i - (d/2) log(2 pi theta_i) - d/2 - 1 ]

    This closure entropy is non-increasing along the moment ODEs, so it
    serves as the entropy diagnostic for moments-only runs.
    """
    theta = mom.T / mom.mass
    d = mom.dim
    return float(
        (mom.n * (np.log(mom.n) - 0.5 * d * np.log(2.0 * np.pi * theta) - 0.5 * d - 1.0)).sum()
    )


# ---------------------------------------------------------------------------
# full time step on the velocity grid
# ---------------------------------------------------------------------------


@dataclass
class SimulationState:
    """Grid-mode solver state: distributions plus their tracked moments."""

    species: SpeciesSet
    grid: VelocityGrid
    kappa: np.ndarray
    dist: DistributionSet
    moments: MomentSet
    time: float = 0.0


@dataclass(frozen=True)
class StepDiagnostics:
    time: float
    gst_iterations: int
    gst_residual: float
    entropy: float
    mass: np.ndarray
    total_momentum: float
    total_energy: float
    moment_drift: float
    drift_flagged: bool


def initial_state(
    species: SpeciesSet,
    grid: VelocityGrid,
    kappa: np.ndarray,
    u0: np.ndarray,
    T0: np.ndarray,
) -> SimulationState:
    """Maxwellian initial distributions with the tracked moments taken from
    the discrete quadrature of f itself (no renormalization), so the discrete
    conservation statements are exact from the first step."""
    u0 = np.asarray(u0, dtype=float)
    T0 = np.asarray(T0, dtype=float)
    N = len(species)
    if u0.shape != (N,) or T0.shape != (N,):
        raise ValueError(f"u0 and T0 must have one entry per species ({N})")
    if np.any(T0 <= 0.0):
        raise ValueError(f"initial temperatures must be positive, got {T0}")
    kappa = np.asarray(kappa, dtype=float)
    validate_kappa(kappa, species.masses)

    f = np.empty((N, grid.n_cells))
    for i, spec in enumerate(species.species):
        f[i] = np.exp(log_maxwellian(spec.density, u0[i], T0[i] / spec.mass, grid))
    dist = DistributionSet(grid, f)
    moms = [moments_of(f[i], grid, species.species[i].mass) for i in range(N)]
    moments = MomentSet(
        n=np.array([mm.n for mm in moms]),
        u=np.array([mm.u for mm in moms]),
        T=np.array([mm.T for mm in moms]),
        mass=species.masses,
    )
    return SimulationState(
        species=species, grid=grid, kappa=kappa, dist=dist, moments=moments, time=0.0
    )


def full_step(
    state: SimulationState,
    dt: float,
    *,
    gst_tol: float = 1e-12,
    gst_max_iter: int = 200,
    drift_threshold: float = 1e-4,
) -> tuple[SimulationState, StepDiagnostics]:
    """Advance distributions and moments by one implicit Euler step.

    Stages: (1) backward-Euler moment update; (2) mixture velocities,
    temperatures, and Maxwellian exponents from the new moments; (3) one
    tridiagonal solve per species; (4) diagnostics (entropy, discrete mass,
    conserved totals, and the drift between the updated moments and the
    moments of the new distributions, which is the price of the velocity-
    domain truncation and is flagged in the diagnostics above
    ``drift_threshold``).
    """
    if state.moments.dim != 1:
        raise ValueError("the gridded solver supports one velocity dimension")
    upd = implicit_moment_update(
        state.moments, state.species, state.kappa, dt, tol=gst_tol, max_iter=gst_max_iter
    )
    mom = upd.moments
    table = build_coefficients(state.species, mom.T, state.kappa, densities=mom.n)
    u_mix, _, theta = mixture_state(table, mom.u, mom.T)

    grid = state.grid
    N = len(state.species)
    f_new = np.empty_like(state.dist.values)
    for i in range(N):
        terms = []
        for j in range(N):
            if table.lam[i, j] == 0.0:
                continue
            g = log_maxwellian(mom.n[i], u_mix[i, j, 0], theta[i, j], grid)
            terms.append((table.lam[i, j], theta[i, j], assemble_collision_operator_from_log(g)))
        f_new[i] = implicit_collision_solve(state.dist.values[i], terms, dt, grid)
        if not np.all(f_new[i] > 0.0):
            k = int(np.argmin(f_new[i]))
            raise SolverError(
                f"distribution of species {i + 1} lost positivity at cell "
                f"{k + 1} (value {f_new[i][k]:.3e}) at t = {state.time + dt:.6g}"
            )

    dist_new = DistributionSet(grid, f_new)
    f_moms = [moments_of(f_new[i], grid, state.species.species[i].mass) for i in range(N)]
    scale = max(np.abs(mom.u).max(), mom.T.max(), 1e-300)
    drift = max(
        max(abs(f_moms[i].u - mom.u[i, 0]) for i in range(N)),
        max(abs(f_moms[i].T - mom.T[i]) for i in range(N)),
    ) / scale

    diag = StepDiagnostics(
        time=state.time + dt,
        gst_iterations=upd.iterations,
        gst_residual=upd.residual,
        entropy=entropy(dist_new),
        mass=grid.h * f_new.sum(axis=1),
        total_momentum=float((mom.rho[:, None] * mom.u).sum()),
        total_energy=float(mom.energy.sum()),
        moment_drift=drift,
        drift_flagged=drift > drift_threshold,
    )
    new_state = SimulationState(
        species=state.species,
        grid=grid,
        kappa=state.kappa,
        dist=dist_new,
        moments=mom,
        time=state.time + dt,
    )
    return new_state, diag
