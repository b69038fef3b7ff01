"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: validation problems exit 2, numerical
failures exit 3, I/O failures exit 4.
"""


class SphereFieldError(Exception):
    """Base class for package errors."""


class DomainError(SphereFieldError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(SphereFieldError, ValueError):
    """A configuration or manifest violates the model's admissible ranges."""


class BudgetError(SphereFieldError, RuntimeError):
    """A resource cap was exceeded (degree cap, dense-factorization size)."""


class FactorizationError(SphereFieldError, RuntimeError):
    """Covariance factorization failed even after the clipping fallback."""

    def __init__(self, message: str, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class QuadratureError(SphereFieldError, RuntimeError):
    """Adaptive quadrature did not converge to the requested tolerance."""
