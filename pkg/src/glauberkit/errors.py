"""Exception types raised across the package."""


class GlauberKitError(Exception):
    """Base class for package errors."""


class InvalidGeometry(GlauberKitError, ValueError):
    pass


class InvalidRegion(GlauberKitError, ValueError):
    pass


class IncompatibleChains(GlauberKitError, ValueError):
    pass


class PreconditionViolation(GlauberKitError, ValueError):
    pass


class NonCoalesced(GlauberKitError, RuntimeError):
    """CFTP did not coalesce within the allowed number of epoch doublings."""

    def __init__(self, message, horizon=None):
        super().__init__(message)
        self.horizon = horizon


class CapacityExceeded(GlauberKitError, ValueError):
    pass


class SetupError(GlauberKitError, RuntimeError):
    pass


class LevelOverflow(GlauberKitError, ValueError):
    pass


class RangeError(GlauberKitError, OverflowError):
    def __init__(self, message, largest_k=None):
        super().__init__(message)
        self.largest_k = largest_k


class SubcriticalError(GlauberKitError, ValueError):
    pass


class NotSubcritical(GlauberKitError, ValueError):
    pass


class DivergentTilt(GlauberKitError, ValueError):
    pass


class TooLarge(GlauberKitError, MemoryError):
    pass


class OutOfRange(GlauberKitError, ValueError):
    pass


class DegenerateConfiguration(GlauberKitError, ValueError):
    def __init__(self, message, config=None):
        super().__init__(message)
        self.config = config


class InsufficientSamples(GlauberKitError, ValueError):
    pass
