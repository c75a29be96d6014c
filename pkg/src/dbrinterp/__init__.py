"""Interpolation in de Branges-Rovnyak spaces for rational Schur-class data.

Finite-dimensional realizations throughout: Stein solves, the Redheffer
colligation of an abstract interpolation problem, Hardy-space and boundary
problems, and intersections with ``B H^2``.
"""
__version__ = "0.1.0"

from .errors import (
    DbrInterpError,
    DimensionError,
    DomainError,
    PreconditionError,
    IllPosedError,
    NumericalError,
    PoleError,
    ConditioningError,
    NotAdmissibleError,
    InconsistencyError,
    UnsolvableError,
    RouteUnavailableError,
    BudgetExceededError,
    RecoveryError,
    UnstableError,
)
from .numlin import DEFAULT_TOL, Tolerances
from .rational import Realization, SchurFunction, blaschke, certify_schur, evaluate, taylor_coeffs
from .aipdata import AipDataSet, check_admissible, compute_P_oap, solvability
from .oap import cf_data, h2_solve, np_data, oap_to_aip
from .redheffer import build_colligation, recover_parameter, redheffer_apply
from .solve import aip_solve, douglas_solve, solve_inverse_route, solve_problem
from .homint import intersection_space, model_space
from .boundary import BoundaryDataSet, compute_P_boundary, solve_boundary

__all__ = [
    "__version__",
    "DEFAULT_TOL",
    "Tolerances",
    "Realization",
    "SchurFunction",
    "blaschke",
    "certify_schur",
    "evaluate",
    "taylor_coeffs",
    "AipDataSet",
    "check_admissible",
    "compute_P_oap",
    "solvability",
    "cf_data",
    "h2_solve",
    "np_data",
    "oap_to_aip",
    "build_colligation",
    "recover_parameter",
    "redheffer_apply",
    "aip_solve",
    "douglas_solve",
    "solve_inverse_route",
    "solve_problem",
    "intersection_space",
    "model_space",
    "BoundaryDataSet",
    "compute_P_boundary",
    "solve_boundary",
    "DbrInterpError",
    "DimensionError",
    "DomainError",
    "PreconditionError",
    "IllPosedError",
    "NumericalError",
    "PoleError",
    "ConditioningError",
    "NotAdmissibleError",
    "InconsistencyError",
    "UnsolvableError",
    "RouteUnavailableError",
    "BudgetExceededError",
    "RecoveryError",
    "UnstableError",
]
