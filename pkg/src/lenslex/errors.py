"""Exception types shared across the package."""


class LensLexError(Exception):
    """Base class for all domain errors."""


class ParseError(LensLexError):
    """Malformed ODDL input. Carries the 1-based line/column of the offense."""

    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class DuplicateSpec(ParseError):
    """A SPEC key appeared more than once in one document."""


class UnknownMaterial(LensLexError):
    """Material name is neither a catalog entry nor inline glass."""


class NothingToMask(LensLexError):
    """Masking requested on a prescription without lens surfaces."""


class ApertureExceedsRadius(LensLexError):
    """Semi-diameter larger than |R|: no such spherical cap exists."""


class DegeneratePupil(LensLexError):
    """Stop-plane ray height is insensitive to the launch height."""


class SpotUnavailable(LensLexError):
    """Spot sampling preconditions unmet (no field of view or stop aperture)."""


class TotalInternalReflection(LensLexError):
    """Real ray exceeded the critical angle at a surface."""

    def __init__(self, surface: int, points=None):
        self.surface = surface
        self.points = points or []
        super().__init__(f"total internal reflection at surface {surface}")


class MissedSurface(LensLexError):
    """Real ray has no valid intersection with a surface."""

    def __init__(self, surface: int, points=None):
        self.surface = surface
        self.points = points or []
        super().__init__(f"ray missed surface {surface}")


class ShapeMismatch(LensLexError):
    """Ragged surrogate inputs do not share a consistent shape."""


class ZeroVariance(LensLexError):
    """Reference GRPO advantages are undefined for a constant group."""


class RenderError(LensLexError):
    """Layout rendering is impossible for this prescription."""
