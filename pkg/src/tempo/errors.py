"""
Exceptions raised by the toolkit.
"""


class TempoError(Exception):
    """Base class for all errors raised by tempo."""


class ShapeError(TempoError, ValueError):
    """An array does not fit the shape of a set or cost domain."""


class ConvergenceError(TempoError, RuntimeError):
    """An iterative routine did not reach its tolerance within its budget."""


class DivergenceError(TempoError, RuntimeError):
    """The iterates of a solver blew up (usually a wrong step-size)."""


class HistoryError(TempoError, ValueError):
    """Not enough past samples are available on the time grid."""


class NetworkError(TempoError, ValueError):
    """Invalid use of a network, e.g. transmitting along a non-edge."""


class ConfigError(TempoError, ValueError):
    """Malformed or inconsistent run configuration."""


class NotDifferentiableError(TempoError, TypeError):
    """An oracle was requested that the cost does not provide."""
