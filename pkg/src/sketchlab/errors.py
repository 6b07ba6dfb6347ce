"""Exception taxonomy. Every error carries a machine-parsable category used by the CLI."""


class SketchLabError(Exception):
    """Base class; `category` maps to a CLI exit code."""

    category = "data"


class ConfigError(SketchLabError):
    category = "config"


class ExclusivityError(ConfigError):
    """Mutually exclusive structural transforms requested together."""


class ParseError(SketchLabError):
    """Malformed input record; message includes line context when available."""


class EmptySketchError(SketchLabError):
    """A sketch (or drawing record) with no usable strokes."""


class CoordinateRangeError(SketchLabError):
    """Input coordinate outside the documented source range."""


class ShapeMismatchError(SketchLabError):
    """Image dimensions differ where they must match."""


class EmptyForegroundError(SketchLabError):
    """No foreground pixels below threshold; signals a blank image."""


class InsufficientDataError(SketchLabError):
    """Fewer records than the analysis needs."""


class IncompleteStatsError(SketchLabError):
    """Category statistics missing or non-finite; message lists offenders."""


class TrackFormatError(SketchLabError):
    """Landmark stream violates the documented frame schema."""


class DegenerateGeometryError(SketchLabError):
    """Hand geometry too degenerate for the pen-state heuristic."""
