"""Exception hierarchy shared across the package."""


class GraphBarlowError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(GraphBarlowError, ValueError):
    """Operand shapes are not conformable."""


class ContractError(GraphBarlowError, ValueError):
    """A call violated an operation precondition."""


class ConfigError(GraphBarlowError, ValueError):
    """A configuration value is out of its valid range."""


class GraphError(GraphBarlowError, ValueError):
    """A graph violates the data-model invariants."""


class DegenerateLabelsError(GraphBarlowError, ValueError):
    """Training labels contain a single class, so no classifier can be fit."""


class NonFiniteLossError(GraphBarlowError, FloatingPointError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, epoch, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class DatasetError(GraphBarlowError):
    """Base class for on-disk dataset problems."""


class MissingFileError(DatasetError, FileNotFoundError):
    pass


class FormatVersionError(DatasetError):
    pass


class SizeMismatchError(DatasetError):
    pass


class CheckpointError(GraphBarlowError):
    pass
