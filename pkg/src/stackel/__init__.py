"""Generalized Staeckel systems with a side condition.

Build the metric, constants of motion and operators from a generalized
Staeckel matrix, check the separability conditions pointwise, and construct
separated solutions.
"""

from ._kernels import BACKEND, available_backends
from .stackel_core import (
    DegenerateMetricError, GeneralizedStackelMatrix, OrthogonalMetric, QuadraticForm, SingularMatrixError,
    StackelError, StructuralError, constants_of_motion, metric_from,
)
from .sysdef import SysdefError, SystemDefinition

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DegenerateMetricError", "GeneralizedStackelMatrix", "OrthogonalMetric", "QuadraticForm",
    "SingularMatrixError", "StackelError", "StructuralError", "SysdefError", "SystemDefinition",
    "available_backends", "constants_of_motion", "metric_from",
]
