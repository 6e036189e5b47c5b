"""Riemannian preconditioned Tucker tensor completion."""

from ._core import *  # noqa: F401,F403
from ._core import (
    CompletionInstance,
    Metric,
    SolverConfig,
    SparseTensor3,
    TuckerPoint,
    conjugate_gradient,
    generate_instance,
    gradient_descent,
    sgd,
)

__all__ = [
    "CompletionInstance",
    "Metric",
    "SolverConfig",
    "SparseTensor3",
    "TuckerPoint",
    "conjugate_gradient",
    "generate_instance",
    "gradient_descent",
    "sgd",
]
