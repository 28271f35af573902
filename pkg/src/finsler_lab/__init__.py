"""Spray and curvature machinery for (alpha, beta)-metrics, with executable projective checks."""

from .alphabeta import PhiFamily
from .errors import (
    DegenerateFit,
    DomainError,
    EmptyTrace,
    FinslerLabError,
    NonPositiveDefinite,
    SingularEvaluation,
    SpecError,
)
from .metric import MetricSpec, load_spec

__all__ = [
    "DegenerateFit",
    "DomainError",
    "EmptyTrace",
    "FinslerLabError",
    "MetricSpec",
    "NonPositiveDefinite",
    "PhiFamily",
    "SingularEvaluation",
    "SpecError",
    "load_spec",
]
