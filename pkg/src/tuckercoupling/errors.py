"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument breaks an operation's precondition (shape, index, range)."""


class SingularityError(ArithmeticError):
    """Source and observation points coincide (or nearly so)."""


class SceneError(ValueError):
    """Scene geometry is invalid, e.g. a source sits too close to the voxel grid."""

    def __init__(self, message, source_index=None):
        super().__init__(message)
        self.source_index = source_index


class CapacityError(MemoryError):
    """A dense allocation would exceed the configured memory cap."""


class FormatError(ValueError):
    """A persisted container is malformed; ``offset`` is the byte position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
