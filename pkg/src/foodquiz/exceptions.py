"""Shared exception types."""


class FoodquizError(Exception):
    """Base class for all package-specific errors."""


class FormatError(FoodquizError):
    """An input file violates its documented format."""


class CompileError(FoodquizError):
    """Quiz compilation cannot proceed (e.g. a feature has no template)."""

    def __init__(self, message: str, missing: list | None = None):
        super().__init__(message)
        self.missing = missing or []


class EngineError(FoodquizError):
    """A session operation was rejected; ``code`` is machine-readable."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class ImplausibleAnthropometry(FoodquizError):
    """Reported height/weight falls outside the plausible human range."""
