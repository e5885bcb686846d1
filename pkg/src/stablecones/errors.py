"""Exception types shared across the package."""


class ConeError(Exception):
    """Base class for every error raised by :mod:`stablecones`."""


class ContractViolation(ConeError, TypeError):
    """An element, character or transversal does not fit the cone it is used with."""


class DomainError(ConeError, ValueError):
    """A numeric argument lies outside the domain of an operation."""


class TransversalDomainError(DomainError):
    """The scaling orbit of an element does not meet the transversal.

    Raised for the neutral element and for elements on which every listed
    ``h_n = 1 - Re chi_n`` vanishes identically along the orbit.
    """


class AdmissibilityError(ConeError, ValueError):
    """Uncompensated LePage summation is not valid for this (cone, alpha, symmetry)."""


class QuadratureBudgetExceeded(ConeError, RuntimeError):
    """Adaptive quadrature ran out of function evaluations.

    The partial estimate accumulated so far is kept in :attr:`partial`.
    """

    def __init__(self, message: str, partial: float = float("nan"), error: float = float("inf")):
        super().__init__(message)
        self.partial = partial
        self.error = error
