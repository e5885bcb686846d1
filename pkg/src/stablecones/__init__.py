"""Strictly stable random elements of convex cones.

Polar decomposition along transversals, LePage series simulation and
statistical checks of the stability property, for five concrete cones.
"""

from .cones import KINDS, ConeSpec, default_spectral, make_cone, spectral_from_name
from .core import ConeDescriptor, FourierCharacter, IndicatorCharacter, LaplaceCharacter, StepFunction
from .errors import (
    AdmissibilityError,
    ConeError,
    ContractViolation,
    DomainError,
    QuadratureBudgetExceeded,
    TransversalDomainError,
)
from .lepage import sample_batch, sample_series, truncated_laplace_exponent
from .polar import CharacterTransversal, NormTransversal, RadialLaw, compose, decompose, tau

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "ConeSpec",
    "make_cone",
    "default_spectral",
    "spectral_from_name",
    "ConeDescriptor",
    "FourierCharacter",
    "IndicatorCharacter",
    "LaplaceCharacter",
    "StepFunction",
    "ConeError",
    "ContractViolation",
    "DomainError",
    "TransversalDomainError",
    "AdmissibilityError",
    "QuadratureBudgetExceeded",
    "sample_series",
    "sample_batch",
    "truncated_laplace_exponent",
    "RadialLaw",
    "NormTransversal",
    "CharacterTransversal",
    "tau",
    "decompose",
    "compose",
]
