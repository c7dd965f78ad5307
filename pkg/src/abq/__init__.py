"""abq: anisotropic Boussinesq tools.

Pseudo-spectral solver for the 2D Boussinesq equations on the torus with
vertical-only dissipation, a regularity monitor checking a priori estimates
along trajectories, and a numerical laboratory for the supporting functional
inequalities.
"""

from .monitor import (
    BoundCheck,
    DiagnosticsRecord,
    check_theta_l2_balance,
    check_theta_maximum_principle,
    check_velocity_l2,
    growth_ratio,
    h1_inequality_check,
    local_bound_check,
    record,
    twin_check,
)
from .spectral import (
    Grid,
    GridMismatchError,
    MeanModeError,
    NormSet,
    SpectralField,
    hermitian_symmetrize,
    integral_product,
    norms,
    solve_poisson,
    velocity_from_vorticity,
    x_tail_fraction,
)
from .stepper import (
    BlowUpError,
    SolverConfig,
    State,
    cfl_dt,
    divergence_residual,
    nonlinear_rhs,
    pressure_from_state,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "BoundCheck",
    "DiagnosticsRecord",
    "Grid",
    "GridMismatchError",
    "MeanModeError",
    "NormSet",
    "SolverConfig",
    "SpectralField",
    "State",
    "cfl_dt",
    "check_theta_l2_balance",
    "check_theta_maximum_principle",
    "check_velocity_l2",
    "divergence_residual",
    "growth_ratio",
    "h1_inequality_check",
    "hermitian_symmetrize",
    "integral_product",
    "local_bound_check",
    "nonlinear_rhs",
    "norms",
    "pressure_from_state",
    "record",
    "solve_poisson",
    "step",
    "twin_check",
    "velocity_from_vorticity",
    "x_tail_fraction",
]
