"""Exception types raised across the package."""


class ThermSqueezeError(Exception):
    """Base class for all package errors."""


class DomainError(ThermSqueezeError, ValueError):
    """An argument lies outside the domain of a formula."""


class EnvelopeError(ThermSqueezeError, ValueError):
    """A pump envelope description violates an invariant."""


class SingularityError(ThermSqueezeError, ArithmeticError):
    """The full phase equation was evaluated at (or too close to) u = 0."""


class NoThresholdError(ThermSqueezeError, ValueError):
    """The squeezed quadrature never reaches the shot-noise level."""


class IntegrationError(ThermSqueezeError, RuntimeError):
    """The ODE integrator failed (step-size underflow or similar)."""

    def __init__(self, message, t_fail=None):
        super().__init__(message)
        self.t_fail = t_fail


class TruncationError(ThermSqueezeError, RuntimeError):
    """Fock-space truncation is inadequate for the requested state."""

    def __init__(self, message, t=None, dim=None, tail=None):
        super().__init__(message)
        self.t = t
        self.dim = dim
        self.tail = tail


class DimensionLimitError(TruncationError):
    """The required truncation exceeds the largest supported dimension."""
