"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class ShapeError(ValueError):
    """Array dimensions are inconsistent with the model or dataset."""


class NumericError(RuntimeError):
    """A computation produced non-finite values.

    ``ids`` names the offending samples when known, so callers can report
    which constraints blew up rather than a bare NaN.
    """

    def __init__(self, message, ids=None):
        super().__init__(message)
        self.ids = [int(i) for i in ids] if ids is not None else []


class ConfigError(ValueError):
    """An experiment config failed validation."""
