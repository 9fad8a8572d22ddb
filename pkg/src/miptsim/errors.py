"""Exception types shared across the simulation backends."""


class MiptError(Exception):
    """Base class for all library errors."""


class NormalizationError(MiptError):
    """A distribution or state deviates too far from unit normalization."""


class DomainError(MiptError, ValueError):
    """An argument is outside its allowed domain."""


class CapacityError(MiptError):
    """Requested system size exceeds a hard capacity cap."""


class ContractViolation(MiptError):
    """A caller-supplied object violates a documented precondition."""


class ConfigError(MiptError):
    """Inconsistent circuit or schedule configuration."""


class NumericalConsistencyError(MiptError):
    """An internal self-check (e.g. conditional probabilities) failed."""


class UnsupportedRegionError(MiptError):
    """A subsystem region shape is not supported by the operation."""


class FitError(MiptError):
    """A least-squares fit could not be performed on the given window."""
