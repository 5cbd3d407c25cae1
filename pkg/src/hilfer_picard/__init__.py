"""Picard successive approximations for Hilfer-Hadamard initial value problems.

The problem ``D^{alpha,beta} x = f(t, x)`` with the weighted initial condition
``(log(t/a))^(1-gamma) x -> x0`` is solved through its Volterra integral form
on a graded grid in the log variable ``u = log(t/a)``.
"""

from __future__ import annotations

from hilfer_picard.hadamard_calculus import (
    GridFunction,
    LogGrid,
    WeightedSample,
    hadamard_derivative,
    hadamard_derivative_powerlaw,
    hadamard_integral,
    hadamard_integral_powerlaw,
    hilfer_hadamard_derivative,
    set_num_threads,
)
from hilfer_picard.picard_engine import (
    ConvergenceError,
    PicardRun,
    a_priori_iteration_count,
    error_bound_term,
    error_bound_terms,
    existence_radius,
    initial_condition_check,
    picard_initial,
    picard_step,
    residual,
    solve,
)
from hilfer_picard.problem import Hypotheses, PreconditionError, Problem, gamma_order
from hilfer_picard.rhs_catalog import (
    LinearInLog,
    PowerNonlinear,
    PowerSource,
    Sum,
    closed_form_solution,
    derive_hypotheses,
    eval_factored,
)
from hilfer_picard.special_functions import (
    AccuracyWarning,
    gamma_euler_limit,
    log_gamma,
    mittag_leffler,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyWarning",
    "ConvergenceError",
    "GridFunction",
    "Hypotheses",
    "LinearInLog",
    "LogGrid",
    "PicardRun",
    "PowerNonlinear",
    "PowerSource",
    "PreconditionError",
    "Problem",
    "Sum",
    "WeightedSample",
    "a_priori_iteration_count",
    "closed_form_solution",
    "derive_hypotheses",
    "error_bound_term",
    "error_bound_terms",
    "eval_factored",
    "existence_radius",
    "gamma_euler_limit",
    "gamma_order",
    "hadamard_derivative",
    "hadamard_derivative_powerlaw",
    "hadamard_integral",
    "hadamard_integral_powerlaw",
    "hilfer_hadamard_derivative",
    "initial_condition_check",
    "log_gamma",
    "mittag_leffler",
    "picard_initial",
    "picard_step",
    "residual",
    "set_num_threads",
    "solve",
]
