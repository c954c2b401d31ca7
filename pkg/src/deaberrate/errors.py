"""Exception types shared across the restoration engine."""


class FormatError(ValueError):
    """A serialized file could not be parsed.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DimensionMismatch(ValueError):
    """Array shapes are inconsistent with each other or with a geometry."""


class InvalidSpec(ValueError):
    """A parameter object violates its own preconditions."""


class IllPosedError(ValueError):
    """A closed-form inversion was requested for a singular system."""


class NonFiniteError(ValueError):
    """NaN or infinity encountered in an input, activation or objective."""


class ShapeMismatch(ValueError):
    """A weight tensor does not match the architecture descriptor."""
