"""Exception hierarchy shared by the numerical modules and the CLI."""


class CuspError(Exception):
    """Base class for all errors raised by cuspcmc."""


class MetricDegenerateError(CuspError):
    """The ambient metric is not positive definite (or not invertible) at a point."""


class ChartError(CuspError):
    """A graph hypersurface leaves the r-range on which the metric is trusted."""


class InducedMetricError(CuspError):
    """The induced metric of a graph is singular."""


class ConvergenceError(CuspError):
    """An iterative solver stopped without meeting its tolerance.

    ``residual_history`` carries the sup-norm residuals recorded before the
    failure so callers can report divergence as data.
    """

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class ConfigError(CuspError):
    """Invalid run configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
