"""Optimal dividend barriers for a spectrally negative Levy surplus with
Chapter 11 style reorganisation and Parisian exponential-delay bankruptcy."""

__version__ = "0.1.0"

from .errors import (
    BracketError,
    Chapter11Error,
    DegeneracyError,
    DomainError,
    KnotProximityError,
    ModelValidationError,
    NumericalError,
    UnsupportedModelError,
)
from .levy_model import JumpSpec, LevyModel, cramer_lundberg, phi_inverse, psi, psi_prime, roots_of_psi_eq_q
from .value_engine import (
    BarrierSolution,
    Chapter11Model,
    EllEvaluator,
    RegimeCase,
    optimal_barrier,
    reference_model,
    regime_case,
)
