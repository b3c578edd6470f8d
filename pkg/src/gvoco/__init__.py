"""Gradient-variation online convex optimization under generalized smoothness."""

from .exceptions import (CapabilityError, ConfigError, GvocoError, InputError,
                         InvariantViolation, NumericalDiagnostic)
from .geometry import Ball, Box, diameter, domain_from_config, product, project
from .learners import OptimisticAdaMLProd, OptimisticOMD, UniversalLearner
from .trace import RoundTrace

__version__ = "0.1.0"

__all__ = [
    "GvocoError", "InputError", "ConfigError", "CapabilityError", "InvariantViolation",
    "NumericalDiagnostic", "Ball", "Box", "project", "diameter", "product",
    "domain_from_config", "OptimisticOMD", "OptimisticAdaMLProd", "UniversalLearner",
    "RoundTrace",
]
