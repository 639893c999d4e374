"""Exception hierarchy shared by all modules."""


class PonceletError(ValueError):
    """Base class for every error raised by this package."""


class DegenerateConicError(PonceletError):
    """A confocal parameter sits on (or too close to) a degenerate member."""


class DegenerateFamilyError(PonceletError):
    """Operation needs distinct foci but the family is a circle family."""


class OutOfRangeError(PonceletError):
    """Coordinates or parameters outside the admissible range."""


class NoIntersectionError(PonceletError):
    """A line misses the table or only touches it."""


class BracketError(PonceletError):
    """Root bracketing failed; carries the function values at both ends."""

    def __init__(self, message, lo=None, hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class FitError(PonceletError):
    """Conic fit impossible (too few or collinear points)."""


class NonGenericPairError(PonceletError):
    """The pencil spanned by two conics has a complex or defective spectrum."""

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class AtInfinityError(PonceletError):
    """A projective image lands on the line at infinity."""
