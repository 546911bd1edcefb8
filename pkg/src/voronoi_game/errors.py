"""Shared exception types."""


class VoronoiGameError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(VoronoiGameError):
    """Points of different dimensions were mixed in one operation."""


class DegeneracyError(VoronoiGameError):
    """A comparison landed inside the tolerance band of a decision boundary.

    Rather than silently picking a side we refuse and let the caller decide
    (usually by perturbing the input or shrinking a step size).
    """


class DegenerateStrategyError(VoronoiGameError):
    """A placement construction could not produce the required number of
    distinct points, typically because the input set is too small or too
    clustered."""


class VerificationError(VoronoiGameError):
    """A constructed object failed its own validity check."""
