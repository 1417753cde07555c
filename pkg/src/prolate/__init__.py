"""Angular prolate spheroidal wave functions by the phase-function method.

The main entry points are :func:`build_evaluator`, which constructs a
nonoscillatory phase function for PS_n(z; gamma), and the Legendre
expansion in :mod:`prolate.oxr`, which serves as an independent reference.
"""

from .chebyshev import PiecewiseChebyshev, adaptive_fit
from .errors import (
    DomainError,
    NonconvergenceError,
    NonlinearFailure,
    NumericalFailure,
    StageError,
)
from .legendre import legendre_central, legendre_p, legendre_pbar
from .monotonicity import (
    MonotonicityReport,
    check_absolute_monotone,
    check_conjecture1,
    check_imaginary_axis_monotone,
)
from .ode import OdeProblem, OdeSolution, SolverOptions, solve_adaptive
from .oxr import chi, eval_ps_oxr, ps_expansion
from .phase import (
    AcceleratedSeed,
    PhaseFunction,
    ProlateEvaluator,
    ProlateParams,
    build_evaluator,
    build_evaluator_accelerated,
    eval_ps,
    eval_ps_derivative,
    harvest_seed,
    solve_imag_riccati,
)

__version__ = "0.1.0"

__all__ = [
    "AcceleratedSeed", "DomainError", "MonotonicityReport", "NonconvergenceError",
    "NonlinearFailure", "NumericalFailure", "OdeProblem", "OdeSolution", "PhaseFunction",
    "PiecewiseChebyshev", "ProlateEvaluator", "ProlateParams", "SolverOptions", "StageError",
    "adaptive_fit", "build_evaluator", "build_evaluator_accelerated", "check_absolute_monotone",
    "check_conjecture1", "check_imaginary_axis_monotone", "chi", "eval_ps", "eval_ps_derivative",
    "eval_ps_oxr", "harvest_seed", "legendre_central", "legendre_p", "legendre_pbar",
    "ps_expansion", "solve_adaptive", "solve_imag_riccati",
]
