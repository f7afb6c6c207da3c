"""de la Vallée Poussin means for exponential weights on the real line.

Quick start::

    from vpx import preset, recurrence_table, fourier_coeffs, vp_mean, parse_target
    spec = preset("erdos")
    table = recurrence_table(spec, 64)
    v = vp_mean(fourier_coeffs(table, parse_target("abs"), 64), 16)
    v(0.5)
"""
from .errors import (ConfigError, ConvergenceFailure, DegreeExceeded, DiscretizationFailure,
                     DomainError, NoBracket, QuadratureFailure, TailNotConverged,
                     UnboundedDetected, VpxError, WeightOverflow)
from .functions import BUILTINS, TargetFunction, parse_target
from .mrs import MrsTable, mrs_number, mrs_table
from .norms import NormRequest, best_approx_error, weighted_norm
from .operators import (fourier_coeffs, lebesgue_sup, operator_norm, partial_sum, vp_derivative,
                        vp_eval, vp_lebesgue_function, vp_mean)
from .orthopoly import (RecurrenceTable, build_recurrence, christoffel, eval_polys,
                        recurrence_table)
from .weights import PRESETS, WeightSpec, eval_Q, eval_T, load_spec, preset, weight

__version__ = "0.1.0"

__all__ = [
    "BUILTINS", "ConfigError", "ConvergenceFailure", "DegreeExceeded", "DiscretizationFailure",
    "DomainError", "MrsTable", "NoBracket", "NormRequest", "PRESETS", "QuadratureFailure",
    "RecurrenceTable", "TailNotConverged", "TargetFunction", "UnboundedDetected", "VpxError",
    "WeightOverflow", "WeightSpec", "best_approx_error", "build_recurrence", "christoffel",
    "eval_Q", "eval_T", "eval_polys", "fourier_coeffs", "lebesgue_sup", "load_spec",
    "mrs_number", "mrs_table", "operator_norm", "parse_target", "partial_sum", "preset",
    "recurrence_table", "vp_derivative", "vp_eval", "vp_lebesgue_function", "vp_mean",
    "weight", "weighted_norm",
]
