"""Exception types shared across the package."""


class FinslerError(ValueError):
    """Base class for all domain errors raised by this package."""


class InvalidMetricError(FinslerError):
    """Metric data violates a validity condition at a queried point."""


class DirectionError(FinslerError):
    """A fiber direction was zero or otherwise outside the slit tangent bundle."""


class MapError(FinslerError):
    """A planar map is singular or non-invertible where it was evaluated."""


class ShapeError(FinslerError):
    """A shape or condenser description cannot be used on the given grid."""


class DomainError(FinslerError):
    """Point-invariant arguments hit the excluded degenerate set."""


class ConfigError(FinslerError):
    """A run configuration is malformed or out of the supported ranges."""
