"""Exception hierarchy shared by every decorr module."""


class DecorrError(Exception):
    """Base class for all errors raised by decorr."""


class NonFiniteError(DecorrError, ArithmeticError):
    """A computation produced inf or nan entries."""


class NotPSDError(DecorrError, ValueError):
    """A matrix expected to be positive semidefinite has a clearly negative eigenvalue."""


class StabilityError(DecorrError, ValueError):
    """The drift matrix is not Hurwitz-stable."""


class NonConvergenceError(DecorrError, ArithmeticError):
    """An iterative or limiting procedure did not settle within tolerance."""


class IllConditionedError(DecorrError, ArithmeticError):
    """A numerically fragile structural computation gave inconsistent answers.

    The ``diagnostics`` attribute carries whatever was measured before giving up.
    """

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class IntegrationError(DecorrError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class PreconditionError(DecorrError, ValueError):
    """An argument violates the documented precondition of an operation."""


class UnsupportedMethodError(DecorrError, ValueError):
    """The requested numerical method cannot handle this input."""


class ModelValidationError(DecorrError, ValueError):
    """A model violates one of its invariants (stability, rank condition, ...)."""


class ModelFormatError(DecorrError, ValueError):
    """A model document is malformed (bad JSON, missing or mistyped fields)."""
