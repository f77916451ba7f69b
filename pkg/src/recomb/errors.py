class RecombError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(RecombError, ValueError):
    """An input violates a documented invariant."""


class FeasibilityError(RecombError):
    """The requested computation exceeds a size limit."""
