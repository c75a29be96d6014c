"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`DbrInterpError`, so callers (and the CLI) can catch one type.
"""


class DbrInterpError(Exception):
    """Base class for all library errors."""


class DimensionError(DbrInterpError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(DbrInterpError, ValueError):
    """Input lies outside the domain of the operation."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class PreconditionError(DbrInterpError, ValueError):
    pass


class IllPosedError(DbrInterpError):
    """Equation has no unique solution (e.g. Stein equation with rho(T) >= 1)."""


class NumericalError(DbrInterpError):
    pass


class PoleError(DbrInterpError):
    """Evaluation point is (numerically) a pole."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ConditioningError(NumericalError):
    pass


class NotAdmissibleError(DbrInterpError):
    pass


class InconsistencyError(DbrInterpError):
    """A structural identity the construction relies on failed numerically."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsolvableError(DbrInterpError):
    """The interpolation problem has no solution in the unit ball."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class RouteUnavailableError(DbrInterpError):
    pass


class BudgetExceededError(DbrInterpError):
    def __init__(self, message, norm=None, budget=None):
        super().__init__(message)
        self.norm = norm
        self.budget = budget


class RecoveryError(DbrInterpError):
    """Pointwise recovery of a Redheffer parameter failed."""

    def __init__(self, message, residual=None, max_norm=None):
        super().__init__(message)
        self.residual = residual
        self.max_norm = max_norm


class UnstableError(DomainError):
    """A realization or output pair is not stable (spectral radius >= 1)."""
