"""Exception types shared across the package."""


class ResourceLimitError(ValueError):
    """Requested problem size exceeds the supported desk scale."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularityError(ValueError):
    """Evaluation requested exactly at a singular point."""


class RootSearchError(RuntimeError):
    """Iterative root search failed to converge; carries an iteration trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class StiffnessError(RuntimeError):
    """ODE step size underflowed; the problem is stiff on this grid."""


class ModelRegimeError(RuntimeError):
    """Parameters are outside the validity region of an approximate model."""
