"""Exception hierarchy shared by the pipeline and the CLI."""


class FlowcastError(Exception):
    """Base class for all library errors."""


class DataError(FlowcastError, ValueError):
    """Input data is malformed or cannot support the requested operation."""


class NoPeriodError(DataError):
    """No usable period was found in the target; a manual window size is needed."""


class DivergenceError(FlowcastError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(
            message
            or f"training diverged at epoch {epoch}: non-finite loss "
            "(try setting lstm.clip_norm or a smaller learning rate)"
        )
