"""Exception types raised by vpx."""


class VpxError(Exception):
    """Base class for all vpx errors."""


class DomainError(VpxError, ValueError):
    pass


class WeightOverflow(VpxError, OverflowError):
    """An iterated exponential left the floating point range."""


class NoBracket(VpxError):
    pass


class ConvergenceFailure(VpxError):
    pass


class DiscretizationFailure(VpxError):
    """Refining the discrete measure did not stabilise the recurrence."""

    def __init__(self, message, first_unstable=None):
        super().__init__(message)
        self.first_unstable = first_unstable


class DegreeExceeded(VpxError, ValueError):
    pass


class QuadratureFailure(VpxError):
    pass


class UnboundedDetected(VpxError):
    """The weighted integrand is still growing at the edge of the domain."""


class TailNotConverged(VpxError):
    pass


class ConfigError(VpxError, ValueError):
    pass
