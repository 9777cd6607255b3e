"""Pseudospectral bounds, transfer-matrix regions and closed-form spectral
predicates for non-self-adjoint Anderson-type operators on the line."""

from .errors import (BudgetExceededError, DomainError, InvalidArgumentError, NumericalFailure,
                     RegionMismatchError, SamplerStuckError, WindowTooSmallError)
from .linalg import ComplexBandedMatrix, Polynomial, smallest_singular_value
from .operators import (AndersonParams, ConstrainedQ1, ConstrainedQ2, IIDUniform, Periodic,
                        RandomStream, Ramp, Splice, TruncatedOperator, TwoPoint, Window,
                        build_truncation, parse_spec, sample_potential)
from .transfer import (RegionLabel, classify_point, construct_decaying_solution,
                       e_alpha_curve, trace_polynomial, transfer_product)
from .pseudospectra import GridSpec, ensemble_min, refine, sigma_bound, sweep, table_experiment

__all__ = [
    "AndersonParams", "BudgetExceededError", "ComplexBandedMatrix", "ConstrainedQ1",
    "ConstrainedQ2", "DomainError", "GridSpec", "IIDUniform", "InvalidArgumentError",
    "NumericalFailure", "Periodic", "Polynomial", "RandomStream", "Ramp", "RegionLabel",
    "RegionMismatchError", "SamplerStuckError", "Splice", "TruncatedOperator", "TwoPoint",
    "Window", "WindowTooSmallError", "build_truncation", "classify_point",
    "construct_decaying_solution", "e_alpha_curve", "ensemble_min", "parse_spec", "refine",
    "sample_potential", "sigma_bound", "smallest_singular_value", "sweep", "table_experiment",
    "trace_polynomial", "transfer_product",
]
