"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """Raised when an input violates a documented precondition."""


class NumericalFailure(RuntimeError):
    """Raised when a numerical kernel cannot produce a trustworthy result."""
