"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment or generator configuration."""


class ShapeError(ValueError):
    """Array dimensions do not match what an operation expects."""


class ContractError(RuntimeError):
    """An API precondition was violated (stale cache, wrong head, ...)."""


class NumericError(FloatingPointError):
    """A non-finite value showed up where a finite one is required."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class TrainingError(RuntimeError):
    """Training diverged; carries the epoch and batch where it happened."""

    def __init__(self, message, epoch, batch):
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch
