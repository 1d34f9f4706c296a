"""Moment dynamics: the coupled relaxation ODEs for bulk velocity and
temperature, their conserved quantities, pairwise relaxation rates, and a
fixed-step fourth-order reference integrator.

The ODE system (densities are constant in the space-homogeneous setting):

    d(rho_i u_i)/dt = Sum_j rho_i lam_ij (1 - alpha_ij) (u_j - u_i)
    (d/2) d(n_i T_i)/dt = d Sum_j n_i lam_ij (1 - beta_ij) (T_j - T_i)
                          + Sum_j n_i lam_ij gamma_ij |u_i - u_j|^2

Total momentum and total energy are invariants, which pins the global
equilibrium (u_inf, T_inf) from the initial data alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .kinetics import SpeciesSet
from .mixture import RATE_PREFACTOR, CoefficientTable, validate_kappa

__all__ = [
    "MomentSet",
    "MomentTrajectory",
    "momentum_rhs",
    "energy_rhs",
    "temperature_rhs",
    "equilibrium_state",
    "pair_relaxation_rates",
    "coulomb_relaxation_rates",
    "integrate_moments",
]


@dataclass
class MomentSet:
    """Per-species bulk moments at one time level.

    ``u`` is stored as (N, d); a 1-d input is treated as N scalar velocities
    (d = 1). Temperatures must be positive.
    """

    n: np.ndarray
    u: np.ndarray
    T: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        self.T = np.asarray(self.T, dtype=float)
        self.mass = np.asarray(self.mass, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        self.u = u
        N = self.n.size
        if self.T.size != N or self.mass.size != N or self.u.shape[0] != N:
            raise ValueError("moment arrays must agree on the species count")
        if np.any(self.n <= 0.0):
            raise ValueError(f"number densities must be positive, got {self.n}")
        if np.any(self.T <= 0.0):
            raise ValueError(f"temperatures must be positive, got {self.T}")
        if np.any(self.mass <= 0.0):
            raise ValueError(f"masses must be positive, got {self.mass}")

    @property
    def n_species(self) -> int:
        return self.n.size

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    @property
    def rho(self) -> np.ndarray:
        return self.mass * self.n

    @property
    def speed_squared(self) -> np.ndarray:
        """s_i = |u_i|^2."""
        return np.einsum("id,id->i", self.u, self.u)

    @property
    def energy(self) -> np.ndarray:
        """E_i = rho_i |u_i|^2 / 2 + (d/2) n_i T_i."""
        return 0.5 * self.rho * self.speed_squared + 0.5 * self.dim * self.n * self.T

    def copy(self) -> "MomentSet":
        return MomentSet(self.n.copy(), self.u.copy(), self.T.copy(), self.mass.copy())


def _offdiag(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    np.fill_diagonal(out, 0.0)
    return out


def _pair_distances_sq(u: np.ndarray) -> np.ndarray:
    s = np.einsum("id,id->i", u, u)
    p = u @ u.T
    return s[:, None] + s[None, :] - 2.0 * p


def momentum_rhs(mom: MomentSet, table: CoefficientTable) -> np.ndarray:
    """d(rho_i u_i)/dt, shape (N, d). Sums to zero over species."""
    W = _offdiag(table.delta)
    return W @ mom.u - W.sum(axis=1)[:, None] * mom.u


def temperature_rhs(mom: MomentSet, table: CoefficientTable) -> np.ndarray:
    """(d/2) d(n_i T_i)/dt, shape (N,)."""
    d = mom.dim
    n = mom.n
    K = _offdiag(n[:, None] * table.lam * (1.0 - table.beta))
    G = _offdiag(n[:, None] * table.lam * table.gamma)
    sq = _pair_distances_sq(mom.u)
    return d * (K @ mom.T - K.sum(axis=1) * mom.T) + (G * sq).sum(axis=1)


def energy_rhs(mom: MomentSet, table: CoefficientTable) -> np.ndarray:
    """dE_i/dt, shape (N,). Sums to zero over species.

    Equals u_i . momentum_rhs_i + temperature_rhs_i whenever the coefficient
    table satisfies the conservation symmetries.
    """
    d = mom.dim
    n = mom.n
    K = _offdiag(n[:, None] * table.lam * (1.0 - table.beta))
    P = _offdiag(table.delta - n[:, None] * table.lam * table.gamma)
    s = mom.speed_squared
    p = mom.u @ mom.u.T
    A = P * (p - s[:, None])
    B = P.T * (p - s[None, :])
    return d * (K @ mom.T - K.sum(axis=1) * mom.T) + (A - B).sum(axis=1)


def equilibrium_state(mom: MomentSet) -> tuple[np.ndarray, float]:
    """Time-invariant global equilibrium (u_inf, T_inf).

        u_inf = Sum rho_i u_i / Sum rho_i
        T_inf = Sum n_i T_i / Sum n_i
                + Sum rho_i (|u_i|^2 - |u_inf|^2) / (d Sum n_i)
    """
    rho = mom.rho
    n_tot = mom.n.sum()
    u_inf = (rho[:, None] * mom.u).sum(axis=0) / rho.sum()
    T_inf = (mom.n * mom.T).sum() / n_tot + (
        rho * (mom.speed_squared - u_inf @ u_inf)
    ).sum() / (mom.dim * n_tot)
    return u_inf, float(T_inf)


def pair_relaxation_rates(
    mom: MomentSet, table: CoefficientTable, i: int, j: int
) -> tuple[np.ndarray, float]:
    """Two-species relaxation rates of this model, all other species ignored.

        d(rho_i u_i - rho_j u_j)/dt = 2 rho_i lam_ij (1 - alpha_ij) (u_j - u_i)
        (d/2) d(n_i T_i - n_j T_j)/dt = 2 d n_i lam_ij (1 - beta_ij) (T_j - T_i)
                + (2 n_i lam_ij gamma_ij - delta_ij) |u_i - u_j|^2
    """
    du = mom.u[j] - mom.u[i]
    momentum = 2.0 * table.delta[i, j] * du
    nl = mom.n[i] * table.lam[i, j]
    temperature = 2.0 * mom.dim * nl * (1.0 - table.beta[i, j]) * (mom.T[j] - mom.T[i]) + (
        2.0 * nl * table.gamma[i, j] - table.delta[i, j]
    ) * float(du @ du)
    return momentum, float(temperature)


def coulomb_relaxation_rates(
    mom: MomentSet, species: SpeciesSet, i: int, j: int
) -> tuple[np.ndarray, float]:
    """Two-species relaxation rates of the Coulomb-potential Boltzmann operator.

        d(rho_i u_i - rho_j u_j)/dt = xi_ij (m_i + m_j) (u_j - u_i)
        (d/2) d(n_i T_i - n_j T_j)/dt = xi_ij [d (T_j - T_i)
                                        + (m_j - m_i)/2 |u_i - u_j|^2]

    Densities are taken from the moment state so that comparisons against the
    model rates use one consistent set.
    """
    m = species.masses
    q = species.charges
    theta_i = mom.T[i] / m[i]
    theta_j = mom.T[j] / m[j]
    xi = (
        RATE_PREFACTOR
        / species.eps0**2
        * species.coulomb_log[i, j]
        * (q[i] * q[j]) ** 2
        * mom.n[i]
        * mom.n[j]
        / (m[i] * m[j] * (theta_i + theta_j) ** 1.5)
    )
    du = mom.u[j] - mom.u[i]
    momentum = xi * (m[i] + m[j]) * du
    temperature = xi * (
        mom.dim * (mom.T[j] - mom.T[i]) + 0.5 * (m[j] - m[i]) * float(du @ du)
    )
    return momentum, float(temperature)


@dataclass
class MomentTrajectory:
    """Recorded moment history plus conserved diagnostics."""

    times: np.ndarray
    u: np.ndarray  # (M, N, d)
    T: np.ndarray  # (M, N)
    n: np.ndarray  # (N,)
    mass: np.ndarray  # (N,)
    u_inf: np.ndarray = field(init=False)
    T_inf: float = field(init=False)

    def __post_init__(self):
        u0, T0 = equilibrium_state(self.moments_at(0))
        self.u_inf = u0
        self.T_inf = T0

    def moments_at(self, k: int) -> MomentSet:
        return MomentSet(self.n, self.u[k], self.T[k], self.mass)

    @property
    def final(self) -> MomentSet:
        return self.moments_at(-1)

    @property
    def total_momentum(self) -> np.ndarray:
        rho = self.mass * self.n
        return np.einsum("i,mid->md", rho, self.u)

    @property
    def total_energy(self) -> np.ndarray:
        rho = self.mass * self.n
        d = self.u.shape[2]
        s = np.einsum("mid,mid->mi", self.u, self.u)
        return (0.5 * rho * s + 0.5 * d * self.n * self.T).sum(axis=1)


def integrate_moments(
    mom0: MomentSet,
    species: SpeciesSet,
    kappa: np.ndarray,
    t_end: float,
    dt: float = 1e-3,
    record_every: int = 1,
) -> MomentTrajectory:
    """Integrate the moment ODEs with the classical fourth-order scheme.

    Collision frequencies are re-evaluated from the instantaneous
    temperatures at every stage. The step count is floor(t_end / dt) (with a
    tolerance for binary rounding of the quotient), so the final recorded
    time is the largest multiple of dt not exceeding t_end. Raises
    SolverError if any stage produces a non-positive temperature.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    m = species.masses
    q = species.charges
    n = mom0.n
    d = mom0.dim
    kappa = np.asarray(kappa, dtype=float)
    validate_kappa(kappa, m)

    # temperature-independent pieces of xi and of the weight matrices
    xi_const = (
        RATE_PREFACTOR
        / species.eps0**2
        * np.asarray(species.coulomb_log)
        * np.outer(q, q) ** 2
        * np.outer(n, n)
        / np.outer(m, m)
    )
    mu = (m[:, None] + m[None, :]) / (2.0 * m[:, None])
    one_minus_alpha = _offdiag(mu / kappa)
    one_minus_beta = _offdiag(0.5 / kappa)
    gamma = _offdiag(0.5 * m[None, :] / kappa)
    kappa_over_n = kappa / n[:, None]

    def rhs(u: np.ndarray, T: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        if np.any(T <= 0.0):
            bad = int(np.argmin(T))
            raise SolverError(
                f"temperature of species {bad + 1} became non-positive "
                f"({T[bad]:.6e}) near t = {t:.6g}; reduce the step size"
            )
        theta = T / m
        lam = kappa_over_n * xi_const / (theta[:, None] + theta[None, :]) ** 1.5
        W = lam * one_minus_alpha
        du = W @ u - W.sum(axis=1)[:, None] * u
        K = lam * one_minus_beta
        G = lam * gamma
        sq = _pair_distances_sq(u)
        dT = 2.0 * (K @ T - K.sum(axis=1) * T) + (2.0 / d) * (G * sq).sum(axis=1)
        return du, dT

    n_steps = int(np.floor(t_end / dt + 1e-9))
    u = mom0.u.copy()
    T = mom0.T.copy()
    times = [0.0]
    u_hist = [u.copy()]
    T_hist = [T.copy()]
    for step in range(n_steps):
        t = step * dt
        k1u, k1T = rhs(u, T, t)
        k2u, k2T = rhs(u + 0.5 * dt * k1u, T + 0.5 * dt * k1T, t + 0.5 * dt)
        k3u, k3T = rhs(u + 0.5 * dt * k2u, T + 0.5 * dt * k2T, t + 0.5 * dt)
        k4u, k4T = rhs(u + dt * k3u, T + dt * k3T, t + dt)
        u = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        T = T + (dt / 6.0) * (k1T + 2.0 * k2T + 2.0 * k3T + k4T)
        if np.any(T <= 0.0):
            bad = int(np.argmin(T))
            raise SolverError(
                f"temperature of species {bad + 1} became non-positive after "
                f"the step ending at t = {(step + 1) * dt:.6g}; reduce the step size"
            )
        if (step + 1) % record_every == 0 or step + 1 == n_steps:
            times.append((step + 1) * dt)
            u_hist.append(u.copy())
            T_hist.append(T.copy())
    return MomentTrajectory(
        times=np.array(times),
        u=np.array(u_hist),
        T=np.array(T_hist),
        n=n.copy(),
        mass=m,
    )
