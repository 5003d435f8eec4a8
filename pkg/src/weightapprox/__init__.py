"""Polynomial approximation in weighted sup norms with singular weights.

Scalar and vector-valued (Hilbert space coordinates) functions on a compact
interval; weights may vanish or blow up at finitely many points.
"""

__version__ = "0.1.0"

from .errors import (
    BridgeOverlap,
    CertificateInvalid,
    ComponentFailed,
    EvaluationDomainError,
    ExprSyntaxError,
    JobError,
    MaxDegreeExceeded,
    MissingOverride,
    NotInvertible,
    ReportMismatch,
    UnknownIdentifierError,
    WeightApproxError,
    WeightInvalid,
    WeightUnbounded,
)
from .funcspec import FuncExpr, Grid, Interval, eval_array, eval_expr, make_grid, parse_expr, sample
from .membership import MembershipVerdict, check_scalar_membership, check_vector_membership
from .scalar_approx import (
    ApproxResult,
    Polynomial,
    approx_scalar_weighted,
    bernstein_approx,
    chebyshev_interp,
    divide_out_approx,
    regularize_near_singularities,
    weighted_sup_error,
)
from .vector_approx import (
    ApproxCertificate,
    VectorFunction,
    VectorPolynomial,
    allocate_budgets,
    approx_vector,
    choose_truncation,
    parseval_crosscheck,
    weighted_G_norm,
)
from .weights import (
    DimKind,
    ScalarWeight,
    SingularityReport,
    TailCertificate,
    VectorWeight,
    check_bounded,
    classify_point,
    classify_weight,
    ess_limits_one_sided,
    invert_weight,
)

__all__ = [
    "__version__",
    "BridgeOverlap",
    "CertificateInvalid",
    "ComponentFailed",
    "EvaluationDomainError",
    "ExprSyntaxError",
    "JobError",
    "MaxDegreeExceeded",
    "MissingOverride",
    "NotInvertible",
    "ReportMismatch",
    "UnknownIdentifierError",
    "WeightApproxError",
    "WeightInvalid",
    "WeightUnbounded",
    "ApproxResult",
    "Polynomial",
    "approx_scalar_weighted",
    "bernstein_approx",
    "chebyshev_interp",
    "divide_out_approx",
    "regularize_near_singularities",
    "weighted_sup_error",
    "ApproxCertificate",
    "VectorFunction",
    "VectorPolynomial",
    "allocate_budgets",
    "approx_vector",
    "choose_truncation",
    "parseval_crosscheck",
    "weighted_G_norm",
    "DimKind",
    "ScalarWeight",
    "SingularityReport",
    "TailCertificate",
    "VectorWeight",
    "check_bounded",
    "classify_point",
    "classify_weight",
    "ess_limits_one_sided",
    "invert_weight",
    "FuncExpr",
    "Grid",
    "Interval",
    "eval_array",
    "eval_expr",
    "make_grid",
    "parse_expr",
    "sample",
    "MembershipVerdict",
    "check_scalar_membership",
    "check_vector_membership",
]
