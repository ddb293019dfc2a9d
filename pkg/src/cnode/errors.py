"""Exception types shared across the toolkit."""


class CnodeError(Exception):
    """Base class for all toolkit errors."""


class NumericalError(CnodeError):
    """A forward operation produced a non-finite value."""


class GraphMismatchError(CnodeError):
    """Operands belong to different computation graphs."""


class StaleGradientError(CnodeError):
    """backward() called twice without resetting gradients."""


class ShapeError(CnodeError):
    """Dimension mismatch between vectors, layers or trajectories."""


class DomainError(CnodeError):
    """Argument outside the mathematical domain of a function."""


class DivergenceError(CnodeError):
    """ODE integration produced a non-finite state.

    Carries the index of the first bad output time.
    """

    def __init__(self, message, time_index=None):
        super().__init__(message)
        self.time_index = time_index


class ConfigError(CnodeError):
    """Invalid experiment, dataset or task configuration."""


class ReportError(CnodeError):
    """Inconsistent or unreadable run artifacts during aggregation."""
