"""Exception types shared across the package."""


class EisenlabError(Exception):
    """Base class for package errors."""


class PoleError(EisenlabError, ZeroDivisionError):
    """An evaluation hit (or came too close to) a pole; names the factor."""


class BudgetExceededError(EisenlabError):
    """A quadrature/tail bound cannot meet the requested accuracy budget."""


class CancellationFailureError(EisenlabError):
    """A structurally-required pole cancellation failed numerically."""


class ZeroOfLError(EisenlabError):
    """Logarithmic derivative requested at a point where |L| is below threshold."""


class UnsupportedLevelError(EisenlabError):
    """Operation restricted to prime level (or another level constraint)."""


class EvaluationFloorError(EisenlabError):
    """A point fell below the Fourier evaluation floor and could not be rerouted."""


class ConfigError(EisenlabError):
    """Bad CLI/config input; message carries key context."""
