"""Shared helpers: random admissible systems and a dense nonlinear oracle
for the implicit moment update."""

import numpy as np

from lbmix import MomentSet, SpeciesSet, SpeciesSpec
from lbmix.mixture import RATE_PREFACTOR, build_coefficients


def random_system(rng, n_species=None, dim=1):
    """Random admissible system: masses in [0.5, 4], temperatures in
    [0.05, 2], kappa = c mu with c drawn in [1, 5] per ordered pair."""
    N = int(n_species if n_species is not None else rng.integers(2, 5))
    m = rng.uniform(0.5, 4.0, N)
    q = rng.uniform(0.5, 2.0, N)
    n = rng.uniform(0.25, 2.0, N)
    logl = rng.uniform(0.5, 2.0, (N, N))
    logl = 0.5 * (logl + logl.T)
    species = SpeciesSet(
        tuple(SpeciesSpec(m[i], q[i], n[i]) for i in range(N)),
        eps0=rng.uniform(0.5, 2.0),
        coulomb_log=logl,
    )
    T = rng.uniform(0.05, 2.0, N)
    u = rng.uniform(-1.0, 1.0, (N, dim))
    mu = (m[:, None] + m[None, :]) / (2.0 * m[:, None])
    kappa = rng.uniform(1.0, 5.0, (N, N)) * mu
    return species, MomentSet(n=n, u=u, T=T, mass=m), kappa


def table_for(species, mom, kappa):
    return build_coefficients(species, mom.T, kappa, densities=mom.n)


def dense_moment_oracle(mom, species, kappa, dt):
    """Solve the coupled backward-Euler moment equations as one simultaneous
    nonlinear system (all velocities and temperatures at once) with a general
    root finder. Independent of the Gauss-Seidel splitting under test."""
    from scipy.optimize import root

    N = mom.n_species
    d = mom.dim
    m, n, rho = mom.mass, mom.n, mom.rho
    mu = (m[:, None] + m[None, :]) / (2.0 * m[:, None])
    oma = mu / kappa
    omb = 0.5 / kappa * np.ones_like(kappa)
    np.fill_diagonal(oma, 0.0)
    np.fill_diagonal(omb, 0.0)
    q = species.charges
    xi_const = (
        RATE_PREFACTOR
        / species.eps0**2
        * np.asarray(species.coulomb_log)
        * np.outer(q, q) ** 2
        * np.outer(n, n)
        / np.outer(m, m)
    )
    u0, T0, s0 = mom.u, mom.T, mom.speed_squared

    def residual(x):
        u = x[: N * d].reshape(N, d)
        T = x[N * d :]
        theta = T / m
        lam = kappa / n[:, None] * xi_const / (theta[:, None] + theta[None, :]) ** 1.5
        W = dt * rho[:, None] * lam * oma
        r_u = rho[:, None] * (u - u0) - (W @ u - W.sum(axis=1)[:, None] * u)
        s = np.einsum("id,id->i", u, u)
        p = u @ u.T
        C = 2.0 * dt * n[:, None] * lam * omb
        br = (C * (m[None, :] * (s[None, :] - p) - m[:, None] * (s[:, None] - p))).sum(axis=1)
        r_T = rho * (s - s0) + d * n * (T - T0) - d * (C @ T - C.sum(axis=1) * T) - br
        return np.concatenate([r_u.ravel(), r_T])

    sol = root(residual, np.concatenate([u0.ravel(), T0]), method="hybr", tol=1e-13)
    assert sol.success, sol.message
    return sol.x[: N * d].reshape(N, d), sol.x[N * d :]
