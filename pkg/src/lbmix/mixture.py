"""Pairwise mixture coefficients for the multi-species collision model.

Each ordered species pair (i, j) carries a collision frequency lam_ij and
three interpolation weights (alpha, beta, gamma) that define the mixture
velocity and temperature toward which collisions drag f_i:

    u_ij = alpha u_i + (1 - alpha) u_j
    T_ij = beta T_i + (1 - beta) T_j + (gamma / d) |u_i - u_j|^2

Choosing lam_ij = kappa_ij xi_ij / n_i with the Coulomb rate prefactor xi_ij
and the matched weights below makes the pairwise momentum and temperature
relaxation rates equal to the Coulomb-potential Boltzmann rates while keeping
the conservation symmetries exact. Feasibility requires
kappa_ij >= mu_ij = (m_i + m_j) / (2 m_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kinetics import SpeciesSet, SpeciesSpec

__all__ = [
    "RATE_PREFACTOR",
    "MatchedWeights",
    "CoefficientTable",
    "PairSymmetry",
    "PirnerReport",
    "coulomb_rate_prefactor",
    "collision_frequency",
    "kappa_lower_bound",
    "matched_coefficients",
    "partner_coefficients",
    "mixture_velocity",
    "mixture_temperature",
    "mixture_state",
    "kappa_from_scalar",
    "validate_kappa",
    "build_coefficients",
    "symmetry_residuals",
    "max_symmetry_residual",
    "check_weight_bounds",
    "check_pirner_conditions",
]

# 2 / (3 (2 pi)^{3/2}); leading constant of the Coulomb rate prefactor.
RATE_PREFACTOR = 2.0 / (3.0 * (2.0 * np.pi) ** 1.5)


def coulomb_rate_prefactor(
    spec_i: SpeciesSpec,
    spec_j: SpeciesSpec,
    T_i: float,
    T_j: float,
    *,
    eps0: float = 1.0,
    coulomb_log: float = 1.0,
) -> float:
    """Rate prefactor xi_ij of the Coulomb-potential relaxation rates.

        xi = 2 / (3 (2 pi)^{3/2} eps0^2)
             * |log Lambda| (q_i q_j)^2 n_i n_j
             / [m_i m_j (T_i/m_i + T_j/m_j)^{3/2}]

    Symmetric under exchange of the two species.
    """
    if not (T_i > 0.0 and T_j > 0.0):
        raise ValueError(f"temperatures must be positive, got T_i={T_i}, T_j={T_j}")
    theta_sum = T_i / spec_i.mass + T_j / spec_j.mass
    return (
        RATE_PREFACTOR
        / eps0**2
        * coulomb_log
        * (spec_i.charge * spec_j.charge) ** 2
        * spec_i.density
        * spec_j.density
        / (spec_i.mass * spec_j.mass * theta_sum**1.5)
    )


def collision_frequency(kappa: float, prefactor: float, n_i: float) -> float:
    """Collision frequency lam_ij = kappa_ij xi_ij / n_i."""
    if not n_i > 0.0:
        raise ValueError(f"number density must be positive, got {n_i}")
    if kappa < 0.0 or prefactor < 0.0:
        raise ValueError("kappa and the rate prefactor must be non-negative")
    return kappa * prefactor / n_i


def kappa_lower_bound(m_i: float, m_j: float) -> float:
    """Feasibility floor mu_ij = (m_i + m_j) / (2 m_i) for the multiplier kappa_ij."""
    return (m_i + m_j) / (2.0 * m_i)


class MatchedWeights(NamedTuple):
    alpha: float
    beta: float
    gamma: float
    mu: float


def matched_coefficients(m_i: float, m_j: float, kappa: float) -> MatchedWeights:
    """Mixture weights that match the Coulomb relaxation rates.

        alpha = 1 - mu / kappa,  beta = 1 - 1 / (2 kappa),  gamma = m_j / (2 kappa)

    Requires kappa >= mu = (m_i + m_j) / (2 m_i); below the floor alpha turns
    negative and the admissibility bounds fail.
    """
    mu = kappa_lower_bound(m_i, m_j)
    if kappa < mu:
        raise ValueError(
            f"kappa = {kappa} is below the feasibility floor mu = {mu} "
            f"for masses ({m_i}, {m_j}); alpha would be negative"
        )
    alpha = 1.0 - mu / kappa
    beta = 1.0 - 0.5 / kappa
    gamma = 0.5 * m_j / kappa
    return MatchedWeights(alpha=alpha, beta=beta, gamma=gamma, mu=mu)


def partner_coefficients(
    alpha_ij: float,
    beta_ij: float,
    gamma_ij: float,
    lam_ij: float,
    lam_ji: float,
    spec_i: SpeciesSpec,
    spec_j: SpeciesSpec,
) -> tuple[float, float, float]:
    """Weights of the reversed pair (j, i) forced by pairwise conservation.

        alpha_ji = 1 - (rho_i lam_ij / (rho_j lam_ji)) (1 - alpha_ij)
        beta_ji  = 1 - (n_i lam_ij / (n_j lam_ji)) (1 - beta_ij)
        gamma_ji = [rho_i lam_ij (1 - alpha_ij) - n_i lam_ij gamma_ij] / (n_j lam_ji)

    A vanishing reverse frequency is only admissible when the forward pair is
    fully decoupled (alpha = beta = 1, gamma = 0); otherwise momentum or
    energy exchanged by (i, j) has nowhere to go.
    """
    rho_i = spec_i.mass * spec_i.density
    rho_j = spec_j.mass * spec_j.density
    n_i, n_j = spec_i.density, spec_j.density
    if lam_ji == 0.0:
        coupled = lam_ij * (1.0 - alpha_ij) != 0.0 or lam_ij * (1.0 - beta_ij) != 0.0 \
            or lam_ij * gamma_ij != 0.0
        if coupled:
            raise ValueError(
                "reverse collision frequency is zero while the forward pair "
                "still exchanges momentum or energy; conservation is unsatisfiable"
            )
        return 1.0, 1.0, 0.0
    alpha_ji = 1.0 - (rho_i * lam_ij) / (rho_j * lam_ji) * (1.0 - alpha_ij)
    beta_ji = 1.0 - (n_i * lam_ij) / (n_j * lam_ji) * (1.0 - beta_ij)
    gamma_ji = (rho_i * lam_ij * (1.0 - alpha_ij) - n_i * lam_ij * gamma_ij) / (n_j * lam_ji)
    return alpha_ji, beta_ji, gamma_ji


def mixture_velocity(alpha: float, u_i, u_j):
    """Mixture velocity u_ij = alpha u_i + (1 - alpha) u_j (any dimension)."""
    return alpha * np.asarray(u_i, dtype=float) + (1.0 - alpha) * np.asarray(u_j, dtype=float)


def mixture_temperature(
    beta: float, gamma: float, T_i: float, T_j: float, u_i, u_j, dim: int = 1
) -> float:
    """Mixture temperature T_ij = beta T_i + (1-beta) T_j + (gamma/d) |u_i - u_j|^2."""
    du = np.atleast_1d(np.asarray(u_i, dtype=float) - np.asarray(u_j, dtype=float))
    return beta * T_i + (1.0 - beta) * T_j + gamma / dim * float(du @ du)


@dataclass(frozen=True)
class CoefficientTable:
    """Assembled per-ordered-pair coefficients for one set of temperatures.

    All 2-d arrays are (N, N) with the first index naming the species whose
    distribution the pair operator acts on. ``xi`` is evaluated once per
    unordered pair and mirrored, so its symmetry is exact in floating point.
    """

    masses: np.ndarray
    densities: np.ndarray
    kappa: np.ndarray
    xi: np.ndarray
    lam: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    @property
    def n_species(self) -> int:
        return self.masses.size

    @property
    def rho(self) -> np.ndarray:
        return self.masses * self.densities

    @property
    def mu(self) -> np.ndarray:
        return (self.masses[:, None] + self.masses[None, :]) / (2.0 * self.masses[:, None])

    @property
    def delta(self) -> np.ndarray:
        """Momentum-exchange coefficient delta_ij = rho_i lam_ij (1 - alpha_ij)."""
        return self.rho[:, None] * self.lam * (1.0 - self.alpha)


def kappa_from_scalar(c: float, masses: np.ndarray) -> np.ndarray:
    """Uniform kappa table c * max_ij mu_ij; feasible for every pair when c >= 1."""
    if c < 1.0:
        raise ValueError(f"scalar kappa multiplier must be >= 1, got {c}")
    masses = np.asarray(masses, dtype=float)
    mu = (masses[:, None] + masses[None, :]) / (2.0 * masses[:, None])
    return np.full((masses.size, masses.size), c * mu.max())


def validate_kappa(kappa: np.ndarray, masses: np.ndarray) -> None:
    """Check kappa_ij >= mu_ij for every ordered pair; name the first offender."""
    masses = np.asarray(masses, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    mu = (masses[:, None] + masses[None, :]) / (2.0 * masses[:, None])
    bad = np.argwhere(kappa < mu)
    if bad.size:
        i, j = bad[0]
        raise ValueError(
            f"kappa[{i + 1},{j + 1}] = {kappa[i, j]} violates the feasibility "
            f"bound kappa >= mu = {mu[i, j]}"
        )


def build_coefficients(
    species: SpeciesSet,
    T: np.ndarray,
    kappa: np.ndarray,
    *,
    densities: np.ndarray | None = None,
) -> CoefficientTable:
    """Assemble the full coefficient table at the given temperatures.

    ``densities`` overrides the nominal species densities; the solver passes
    the discrete-moment densities here so that every quantity in one run is
    built from a single consistent set.
    """
    N = len(species)
    m = species.masses
    q = species.charges
    n = species.densities if densities is None else np.asarray(densities, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0.0):
        raise ValueError(f"temperatures must be positive, got {T}")
    kappa = np.asarray(kappa, dtype=float)
    validate_kappa(kappa, m)

    theta = T / m
    xi = np.empty((N, N))
    for i in range(N):
        for j in range(i, N):
            # one evaluation per unordered pair keeps xi_ij == xi_ji bit-exact
            val = (
                RATE_PREFACTOR
                / species.eps0**2
                * species.coulomb_log[i, j]
                * (q[i] * q[j]) ** 2
                * n[i]
                * n[j]
                / (m[i] * m[j] * (theta[i] + theta[j]) ** 1.5)
            )
            xi[i, j] = val
            xi[j, i] = val
    lam = kappa * xi / n[:, None]

    mu = (m[:, None] + m[None, :]) / (2.0 * m[:, None])
    alpha = 1.0 - mu / kappa
    beta = 1.0 - 0.5 / kappa
    gamma = 0.5 * m[None, :] / kappa
    return CoefficientTable(
        masses=m, densities=n, kappa=kappa, xi=xi, lam=lam,
        alpha=alpha, beta=beta, gamma=gamma,
    )


def mixture_state(
    table: CoefficientTable, u: np.ndarray, T: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mixture velocities, temperatures, and scaled temperatures for all pairs.

    Returns (u_mix, T_mix, theta) with shapes ((N, N, d), (N, N), (N, N));
    theta_ij = T_ij / m_i is the width parameter of the mixture Maxwellian
    for species i. For i = j the convex combinations collapse to (u_i, T_i).
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    T = np.asarray(T, dtype=float)
    a = table.alpha[:, :, None]
    u_mix = a * u[:, None, :] + (1.0 - a) * u[None, :, :]
    du = u[:, None, :] - u[None, :, :]
    sq = np.einsum("ijk,ijk->ij", du, du)
    d = u.shape[1]
    T_mix = table.beta * T[:, None] + (1.0 - table.beta) * T[None, :] + table.gamma / d * sq
    # the i = j convex combinations collapse identically; write them through
    # so the collapse is exact in floating point as well
    idx = np.arange(table.n_species)
    u_mix[idx, idx, :] = u
    T_mix[idx, idx] = T
    theta = T_mix / table.masses[:, None]
    return u_mix, T_mix, theta


@dataclass(frozen=True)
class PairSymmetry:
    """Conservation-symmetry residuals for one unordered pair.

    The three identities checked (all zero in exact arithmetic for
    conservation-consistent coefficients):

        delta_ij = delta_ji
        n_i lam_ij (1 - beta_ij) = n_j lam_ji (1 - beta_ji)
        delta_ij - 2 n_i lam_ij gamma_ij = 2 n_j lam_ji gamma_ji - delta_ji
    """

    i: int
    j: int
    delta_residual: float
    beta_residual: float
    gamma_residual: float
    delta_scale: float
    beta_scale: float
    gamma_scale: float

    @property
    def max_relative(self) -> float:
        return max(
            self.delta_residual / self.delta_scale,
            self.beta_residual / self.beta_scale,
            self.gamma_residual / self.gamma_scale,
        )


def symmetry_residuals(table: CoefficientTable) -> list[PairSymmetry]:
    """Evaluate the three conservation symmetries for every unordered pair."""
    n = table.densities
    delta = table.delta
    out = []
    floor = 1e-300
    for i in range(table.n_species):
        for j in range(i + 1, table.n_species):
            b_ij = n[i] * table.lam[i, j] * (1.0 - table.beta[i, j])
            b_ji = n[j] * table.lam[j, i] * (1.0 - table.beta[j, i])
            g_ij = delta[i, j] - 2.0 * n[i] * table.lam[i, j] * table.gamma[i, j]
            g_ji = 2.0 * n[j] * table.lam[j, i] * table.gamma[j, i] - delta[j, i]
            out.append(
                PairSymmetry(
                    i=i,
                    j=j,
                    delta_residual=abs(delta[i, j] - delta[j, i]),
                    beta_residual=abs(b_ij - b_ji),
                    gamma_residual=abs(g_ij - g_ji),
                    delta_scale=max(abs(delta[i, j]), abs(delta[j, i]), floor),
                    beta_scale=max(abs(b_ij), abs(b_ji), floor),
                    gamma_scale=max(abs(delta[i, j]), abs(delta[j, i]), floor),
                )
            )
    return out


def max_symmetry_residual(table: CoefficientTable) -> float:
    """Largest relative symmetry residual over all unordered pairs."""
    residuals = symmetry_residuals(table)
    return max(r.max_relative for r in residuals) if residuals else 0.0


def check_weight_bounds(table: CoefficientTable) -> tuple[bool, list[str]]:
    """Admissibility bounds 0 <= alpha, beta <= 1 and gamma >= 0 for all pairs."""
    violations = []
    for i in range(table.n_species):
        for j in range(table.n_species):
            if not 0.0 <= table.alpha[i, j] <= 1.0:
                violations.append(f"alpha[{i + 1},{j + 1}] = {table.alpha[i, j]} outside [0, 1]")
            if not 0.0 <= table.beta[i, j] <= 1.0:
                violations.append(f"beta[{i + 1},{j + 1}] = {table.beta[i, j]} outside [0, 1]")
            if table.gamma[i, j] < 0.0:
                violations.append(f"gamma[{i + 1},{j + 1}] = {table.gamma[i, j]} negative")
    return (not violations), violations


@dataclass(frozen=True)
class PirnerReport:
    """Outcome of the two-species sufficient conditions of Pirner (2024).

    The five inequalities (on the (1, 2) coefficients and the frequency ratio
    eps = n_1 lam_12 / (n_2 lam_21)) are sufficient, not necessary, for the
    admissibility bounds, so ``implication_ok`` is the meaningful gate: when
    every condition holds the bounds must hold as well.
    """

    epsilon: float
    conditions: dict[str, bool]
    all_conditions_hold: bool
    weight_bounds_ok: bool

    @property
    def implication_ok(self) -> bool:
        return self.weight_bounds_ok or not self.all_conditions_hold


def check_pirner_conditions(table: CoefficientTable) -> PirnerReport:
    """Evaluate the five Pirner inequalities for a two-species table."""
    if table.n_species != 2:
        raise ValueError(
            f"the Pirner conditions are stated for two species, got {table.n_species}"
        )
    n = table.densities
    m = table.masses
    eps = n[0] * table.lam[0, 1] / (n[1] * table.lam[1, 0])
    a12, b12, g12 = table.alpha[0, 1], table.beta[0, 1], table.gamma[0, 1]
    lo = eps / (1.0 + eps)
    conditions = {
        "eps <= 1": eps <= 1.0,
        "eps <= m2/m1": eps <= m[1] / m[0],
        "0 <= gamma12 <= m1 (1 - alpha12)": 0.0 <= g12 <= m[0] * (1.0 - a12),
        "eps/(1+eps) <= alpha12 <= 1": lo <= a12 <= 1.0,
        "eps/(1+eps) <= beta12 <= 1": lo <= b12 <= 1.0,
    }
    ok, _ = check_weight_bounds(table)
    return PirnerReport(
        epsilon=eps,
        conditions=conditions,
        all_conditions_hold=all(conditions.values()),
        weight_bounds_ok=ok,
    )
