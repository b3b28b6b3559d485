"""Exception hierarchy shared across the package."""


class QMeasureError(Exception):
    """Base class for all package errors."""


class ShapeError(QMeasureError, ValueError):
    """Array dimensions are inconsistent with the declared composite shape."""


class DomainError(QMeasureError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(QMeasureError, ValueError):
    """An input fails a state invariant (hermiticity, trace, positivity)."""


class ConfigurationError(QMeasureError, ValueError):
    """A sampler or test was configured in a way that cannot work."""


class EfficiencyError(QMeasureError, RuntimeError):
    """Rejection sampling acceptance rate is too low to be usable."""
