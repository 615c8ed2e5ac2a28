"""Pseudo-spectral simulation and verification of variable-density nematic liquid crystal flow."""
from .coefficients import (
    AdmissibilityReport,
    LeslieCoefficients,
    Regime,
    check_dissipation,
    check_parodi,
    derive_lambdas,
    small_data_functional,
)
from .grid import (
    Field,
    GridMismatchError,
    PeriodicGrid,
    RepresentationError,
    dealias_multiply,
    divergence,
    gradient,
    integrate,
    laplacian,
    leray_project,
    sobolev_norm,
    transform_backward,
    transform_forward,
)
from .solver import State, StepperConfig, pressure_recover, run, step
from .initial import InitialSpec, make_initial_data

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport", "Field", "GridMismatchError", "InitialSpec", "LeslieCoefficients", "PeriodicGrid", "Regime",
    "RepresentationError", "State", "StepperConfig", "check_dissipation", "check_parodi", "dealias_multiply",
    "derive_lambdas", "divergence", "gradient", "integrate", "laplacian", "leray_project", "make_initial_data",
    "pressure_recover",
    "run", "small_data_functional", "sobolev_norm", "step", "transform_backward", "transform_forward",
]
