"""Fractional Orlicz-Sobolev toolkit.

Young functions and their structural conditions, Luxemburg norms, the
Gagliardo modular of piecewise-multilinear functions on intervals and
rectangles, the weak fractional M-Laplacian, and a two-solution solver for
``(-Delta)^s_M u = lambda g(x, u)`` with zero exterior data.
"""

from .errors import BracketError, ConfigurationError, DomainError, InvalidFunctionError, OrlisovError
from .grid import (
    Domain, GridFunction, QuadratureScheme, evaluate, fixture, make_grid_function,
    random_nodal, random_unit_direction, read_csv, write_csv,
)
from .modular import (
    LuxemburgResult, ModularValue, full_norm, modular_gagliardo, modular_LM, norm_LM,
    poincare_estimate, seminorm_gagliardo,
)
from .operator import WeakFormContext, apply_weak, gradient_F, monotonicity_probe
from .problem import EnergyValue, Nonlinearity, energy, energy_gradient, eval_g, eval_G, validate_hypotheses
from .solver import (
    SolutionReport, SolverConfig, estimate_c1, lambda_star, minimize, mountain_pass, solve_two,
)
from .young import AuditReport, SampleSpec, YoungFunction, conjugate, growth_indices

__version__ = "0.1.0"

__all__ = [
    "OrlisovError", "DomainError", "InvalidFunctionError", "BracketError", "ConfigurationError",
    "Domain", "GridFunction", "QuadratureScheme", "evaluate", "fixture", "make_grid_function",
    "random_nodal", "random_unit_direction", "read_csv", "write_csv",
    "LuxemburgResult", "ModularValue", "full_norm", "modular_gagliardo", "modular_LM", "norm_LM",
    "poincare_estimate", "seminorm_gagliardo",
    "WeakFormContext", "apply_weak", "gradient_F", "monotonicity_probe",
    "EnergyValue", "Nonlinearity", "energy", "energy_gradient", "eval_g", "eval_G", "validate_hypotheses",
    "SolutionReport", "SolverConfig", "estimate_c1", "lambda_star", "minimize", "mountain_pass", "solve_two",
    "AuditReport", "SampleSpec", "YoungFunction", "conjugate", "growth_indices",
]
