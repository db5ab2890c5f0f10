"""Exception types shared across the package."""


class GraphTCNError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(GraphTCNError, ValueError):
    """Operands have incompatible shapes or extents."""


class DomainError(GraphTCNError, ValueError):
    """An input value lies outside the operation's domain."""


class ContractError(GraphTCNError, ValueError):
    """A caller violated an operation's precondition."""


class NeighborhoodError(GraphTCNError, ValueError):
    """An attention row has no unmasked neighbor."""


class ParseError(GraphTCNError, ValueError):
    """A trajectory file line could not be parsed."""


class DuplicateRecordError(GraphTCNError, ValueError):
    """The same (frame, pedestrian) pair appears twice in one file."""


class ConfigError(GraphTCNError, ValueError):
    """A configuration value or combination is invalid."""


class DataError(GraphTCNError, ValueError):
    """Requested scene or window data is missing."""


class CheckpointFormatError(GraphTCNError, ValueError):
    """A checkpoint file has the wrong magic or version."""


class CheckpointCorruptError(GraphTCNError, ValueError):
    """A checkpoint file is truncated or inconsistent."""


class TrainingDivergedError(GraphTCNError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, window_id, value):
        self.epoch = epoch
        self.window_id = window_id
        self.value = value
        super().__init__(
            f"non-finite loss {value!r} at epoch {epoch}, window {window_id}"
        )
