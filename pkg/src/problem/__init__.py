"""
问题数据模块
"""
from .coefficients import (
    CoefficientSet,
    DerivedBoundaryData,
    MuBound,
    TargetParams,
    eval_boundary_data,
    eval_lambda,
    lambda_field,
    mu_bound,
    mu_bound_details,
)
from .families import build_field, build_input
from .validation import CoefficientValidator, ValidationReport, validate

__all__ = [
    "CoefficientSet",
    "DerivedBoundaryData",
    "MuBound",
    "TargetParams",
    "eval_boundary_data",
    "eval_lambda",
    "lambda_field",
    "mu_bound",
    "mu_bound_details",
    "build_field",
    "build_input",
    "CoefficientValidator",
    "ValidationReport",
    "validate",
]
