"""Exception types raised across the package."""


class ProphetBenchError(ValueError):
    """Base class for all package errors."""


class NoBracket(ProphetBenchError):
    """A monotone target was never attained on the searchable range."""


class InfeasibleTarget(ProphetBenchError):
    """A requested threshold target cannot be met (e.g. gamma*k >= n)."""


class InfeasibleParams(ProphetBenchError):
    """Derived multi-threshold parameters collapse after integer rounding."""


class TooLarge(ProphetBenchError):
    """Exact enumeration would exceed its work bound."""


class IdentityUnavailable(ProphetBenchError):
    """A policy needs arrival identities that the instance does not expose."""
