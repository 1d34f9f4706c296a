"""Velocity-space state: grids, species data, Maxwellians, and discrete moments.

The velocity domain is a uniform cell-centered grid on [-v_max, v_max]. All
moments are midpoint-rule sums with weight h_v, which is the same quadrature
the implicit collision solver conserves exactly, so the discrete conservation
statements downstream hold without renormalization tricks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "VelocityGrid",
    "SpeciesSpec",
    "SpeciesSet",
    "DistributionSet",
    "Moments1V",
    "build_grid",
    "maxwellian",
    "log_maxwellian",
    "moments_of",
]


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centered 1-d velocity grid on [-v_max, v_max].

    Cell centers are v_k = -v_max + (k - 1/2) h_v for k = 1..n_cells with
    h_v = 2 v_max / n_cells, so the first and last faces sit exactly on the
    domain boundary.
    """

    v_max: float
    n_cells: int
    h: float = field(init=False)
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.v_max > 0.0:
            raise ValueError(f"v_max must be positive, got {self.v_max}")
        if self.n_cells < 4:
            raise ValueError(
                f"n_cells must be at least 4 for the three-point stencil, got {self.n_cells}"
            )
        h = 2.0 * self.v_max / self.n_cells
        # centered form (k - (N-1)/2) h is algebraically -v_max + (k + 1/2) h
        # but makes the grid antisymmetric to the last bit
        centers = (np.arange(self.n_cells) - 0.5 * (self.n_cells - 1)) * h
        centers.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "centers", centers)


def build_grid(v_max: float, n_cells: int) -> VelocityGrid:
    """Construct the cell-centered velocity grid."""
    return VelocityGrid(float(v_max), int(n_cells))


@dataclass(frozen=True)
class SpeciesSpec:
    """Static per-species data: particle mass, charge, and number density."""

    mass: float
    charge: float
    density: float

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValueError(f"species mass must be positive, got {self.mass}")
        if not self.density > 0.0:
            raise ValueError(f"species density must be positive, got {self.density}")


@dataclass(frozen=True)
class SpeciesSet:
    """A collection of species plus the shared collision constants.

    ``coulomb_log`` is the per-pair |log Lambda| table; a scalar is broadcast
    to all pairs. ``eps0`` is the vacuum permittivity entering the Coulomb
    rate prefactor.
    """

    species: tuple[SpeciesSpec, ...]
    eps0: float = 1.0
    coulomb_log: np.ndarray | float = 1.0

    def __post_init__(self):
        if len(self.species) < 1:
            raise ValueError("at least one species required")
        if not self.eps0 > 0.0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")
        n = len(self.species)
        table = np.broadcast_to(np.asarray(self.coulomb_log, dtype=float), (n, n)).copy()
        if np.any(table < 0.0):
            raise ValueError("coulomb_log entries must be non-negative")
        if not np.array_equal(table, table.T):
            raise ValueError("coulomb_log table must be symmetric")
        table.setflags(write=False)
        object.__setattr__(self, "coulomb_log", table)

    def __len__(self) -> int:
        return len(self.species)

    @property
    def masses(self) -> np.ndarray:
        return np.array([s.mass for s in self.species])

    @property
    def charges(self) -> np.ndarray:
        return np.array([s.charge for s in self.species])

    @property
    def densities(self) -> np.ndarray:
        return np.array([s.density for s in self.species])


@dataclass
class DistributionSet:
    """Per-species distribution values on a shared velocity grid.

    ``values`` has shape (n_species, n_cells); row i holds f_i at the cell
    centers.
    """

    grid: VelocityGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != self.grid.n_cells:
            raise ValueError(
                f"distribution length {self.values.shape[1]} does not match "
                f"grid with {self.grid.n_cells} cells"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("distribution values must be finite")

    @property
    def n_species(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "DistributionSet":
        return DistributionSet(self.grid, self.values.copy())


class Moments1V(NamedTuple):
    """Midpoint-rule moments of a 1-d distribution."""

    n: float
    rho: float
    u: float
    T: float
    E: float


def log_maxwellian(density: float, velocity: float, theta: float, grid: VelocityGrid) -> np.ndarray:
    """Exponent of the 1-d Maxwellian at the cell centers.

    Returns log M_k for M = n (2 pi theta)^{-1/2} exp(-(v - u)^2 / (2 theta)).
    Working with exponents keeps ratios of adjacent-cell values computable in
    the far tail, where M itself underflows to zero.
    """
    if not density > 0.0:
        raise ValueError(f"Maxwellian density must be positive, got {density}")
    if not theta > 0.0:
        raise ValueError(f"Maxwellian temperature parameter must be positive, got {theta}")
    dv = grid.centers - velocity
    return np.log(density) - 0.5 * np.log(2.0 * np.pi * theta) - dv * dv / (2.0 * theta)


def maxwellian(density: float, velocity: float, theta: float, grid: VelocityGrid) -> np.ndarray:
    """Evaluate the 1-d Maxwellian n (2 pi theta)^{-1/2} exp(-(v-u)^2 / (2 theta)).

    Computed by exponentiating the exponent from :func:`log_maxwellian`.
    """
    return np.exp(log_maxwellian(density, velocity, theta, grid))


def moments_of(f: np.ndarray, grid: VelocityGrid, mass: float) -> Moments1V:
    """Midpoint-rule moments (n, rho, u, T, E) of a gridded distribution.

        n = h Sum f_k
        u = (h / n) Sum v_k f_k
        T = (m h / n) Sum (v_k - u)^2 f_k
        E = rho u^2 / 2 + n T / 2          (d = 1)

    Raises ValueError when the computed density or temperature is not
    positive, which indicates a collapsed or corrupted distribution.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_cells,):
        raise ValueError(f"expected {grid.n_cells} cell values, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("distribution values must be finite")
    h = grid.h
    v = grid.centers
    n = h * f.sum()
    if not n > 0.0:
        raise ValueError(f"computed number density is not positive: {n}")
    u = h * (v * f).sum() / n
    dv = v - u
    T = mass * h * (dv * dv * f).sum() / n
    if not T > 0.0:
        raise ValueError(f"computed temperature is not positive: {T}")
    rho = mass * n
    E = 0.5 * rho * u * u + 0.5 * n * T
    return Moments1V(n=n, rho=rho, u=u, T=T, E=E)
