"""Multi-species Lenard-Bernstein (Dougherty) collision solver.

Pairwise Fokker-Planck operators relax each species toward mixture
Maxwellians whose velocity and temperature weights are tuned so that the
model reproduces the momentum and temperature relaxation rates of the
Coulomb-potential Boltzmann operator while conserving total momentum and
energy and dissipating entropy.
"""

from .config import PRESETS, SimConfig, get_config, load_config
from .errors import ConfigError, SolverError
from .kinetics import (
    DistributionSet,
    SpeciesSet,
    SpeciesSpec,
    VelocityGrid,
    build_grid,
    log_maxwellian,
    maxwellian,
    moments_of,
)
from .mixture import (
    CoefficientTable,
    build_coefficients,
    check_pirner_conditions,
    check_weight_bounds,
    collision_frequency,
    coulomb_rate_prefactor,
    kappa_from_scalar,
    kappa_lower_bound,
    matched_coefficients,
    max_symmetry_residual,
    mixture_state,
    mixture_temperature,
    mixture_velocity,
    partner_coefficients,
    symmetry_residuals,
    validate_kappa,
)
from .moments import (
    MomentSet,
    MomentTrajectory,
    coulomb_relaxation_rates,
    energy_rhs,
    equilibrium_state,
    integrate_moments,
    momentum_rhs,
    pair_relaxation_rates,
    temperature_rhs,
)
from .runner import RunResult, VerifyReport, run, verify
from .solver import (
    MomentDriftWarning,
    SimulationState,
    TridiagonalOperator,
    assemble_collision_operator,
    assemble_collision_operator_from_log,
    backward_euler_residual,
    entropy,
    full_step,
    implicit_collision_solve,
    implicit_moment_update,
    initial_state,
    maxwellian_entropy,
    thomas_solve,
)

__version__ = "0.1.0"
