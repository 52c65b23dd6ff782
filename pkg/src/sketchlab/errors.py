"""Exception types shared across the library."""


class SketchError(Exception):
    """Base class for all library errors."""


class ParameterError(SketchError):
    """A constructor or operation received invalid parameters."""


class BudgetError(SketchError):
    """An exact-enumeration request exceeded its compute budget."""


class StreamFormatError(SketchError):
    """A stream file failed validation; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SamplerFailure(SketchError):
    """The relaxed sampler could not pin a unique index; retry with new seeds."""
