"""Exception types shared across the package."""


class SkewbifError(Exception):
    """Base class for all package-specific errors."""


class NotExtendibleError(SkewbifError):
    """The fiber polynomial has no w^2 term, so the map does not extend to P^2."""


class EmptySamplesError(SkewbifError):
    """An operation that needs a nonempty sample set received an empty one."""


class ResidualRootsError(SkewbifError):
    """Root finding failed to account for every expected solution.

    Carries the subset that was found so callers can degrade gracefully.
    """

    def __init__(self, message, found):
        super().__init__(message)
        self.found = found


class InvalidFiberError(SkewbifError):
    """The requested fiber base point escapes under the base polynomial."""


class UnsupportedBaseError(SkewbifError):
    """The base polynomial is outside the supported (hyperbolic / Chebyshev) cases."""


class AmbiguousComponentError(SkewbifError):
    """A point sits on the Julia set of the base within tolerance, so no
    Fatou component can be assigned."""


class CriticalIntersectionError(SkewbifError):
    """A loop passes through (or too close to) a critical value, so the
    square-root lift cannot be continued."""
