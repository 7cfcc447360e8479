"""Shared exception types.

Domain errors are plain ValueError; the classes below exist where callers
need to tell failure modes apart (CLI exit codes, metric pipelines).
"""

__all__ = [
    "CapacityError",
    "DegenerateFitError",
    "FormatError",
    "UndefinedMetricError",
]


class CapacityError(ValueError):
    """A size guard was exceeded (factorial blowup, too few valid pixels)."""


class FormatError(ValueError):
    """A file's contents do not conform to its declared format."""


class DegenerateFitError(ValueError):
    """Least-squares fit has a singular normal matrix (constant predictions)."""


class UndefinedMetricError(ValueError):
    """A metric has an empty denominator (e.g. every sampled pair is tied)."""
