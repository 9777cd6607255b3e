"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ValueError):
    """A closed form was evaluated outside the range where it holds."""


class NumericalFailure(ArithmeticError):
    """A computation finished but failed its own accuracy check.

    ``context`` carries the offending parameters so callers can echo them.
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class SamplerStuckError(RuntimeError):
    """A constrained potential sampler could not extend its configuration."""


class RegionMismatchError(ValueError):
    """The spectral parameter is not in the region a construction requires."""


class WindowTooSmallError(ValueError):
    """The window truncates a tail that has not yet decayed."""


class BudgetExceededError(ValueError):
    """An exhaustive search would exceed its combinatorial budget."""
