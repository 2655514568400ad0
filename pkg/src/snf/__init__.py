"""Stochastic normal forms for slow-fast SDE systems: exact symbolic
construction of decoupling coordinate transforms, and a Stratonovich
Monte Carlo harness for verifying the reduced models numerically."""

from .noise import (NoiseError, NotDifferentiable, RepeatedRate,
                    MalformedResidual)
from .series import Dims, Series, Trunc
from .systems import (ALLOW, FORBID, NormalForm, Policy, PolicyConflict,
                      SystemSpec, SystemDefinitionError)
from .engine import ConvergenceError, compute_residual, construct, refine_once, verify_order

__all__ = [
    "ALLOW", "FORBID", "ConvergenceError", "Dims", "MalformedResidual",
    "NoiseError", "NormalForm", "NotDifferentiable", "Policy",
    "PolicyConflict", "RepeatedRate", "Series", "SystemDefinitionError", "SystemSpec",
    "Trunc", "compute_residual", "construct", "refine_once", "verify_order",
]

__version__ = "0.1.0"
