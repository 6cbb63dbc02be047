"""Exception hierarchy shared by the simulator modules."""


class ZwmError(Exception):
    """Base class for all simulator errors."""


class InvalidGeometryError(ZwmError, ValueError):
    pass


class GridTooCoarseError(ZwmError, ValueError):
    pass


class EmptyCombRangeError(ZwmError, ValueError):
    pass


class VisibilityDomainError(ZwmError, ValueError):
    pass


class EstimationError(ZwmError):
    """A fit could not produce a meaningful estimate."""


class CannotNormalizeError(ZwmError, ValueError):
    pass


class LowStatisticsError(EstimationError):
    """Too few counts to estimate a visibility."""


class ConfigError(ZwmError, ValueError):
    """Invalid or unreadable configuration file."""
