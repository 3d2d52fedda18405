"""Exception types raised at the package's validation boundaries.

Everything derives from ValueError so plain ``except ValueError`` works, while
the CLI can still tell user mistakes (exit 2) apart from I/O failures (exit 3,
plain OSError).
"""


class SpharrayError(ValueError):
    """Base class for all validation errors raised by spharray."""


class GeometryError(SpharrayError):
    """Invalid microphone-array geometry or coordinate."""


class SubsetError(SpharrayError):
    """Invalid channel-subset selection (duplicates, out of range, too few)."""


class ResolutionError(SpharrayError):
    """Quadrature grid too coarse for the requested harmonic order."""


class SignalError(SpharrayError):
    """Signal empty, too short, or otherwise outside an operation's domain."""


class ShapeError(SpharrayError):
    """Array shape inconsistent with the configured dimensions."""


class NumericDomainError(SpharrayError):
    """Values outside an operation's numeric domain (negative magnitudes, NaN/Inf)."""


class WeightFormatError(SpharrayError):
    """Corrupted or inconsistent network weight file."""


class FileFormatError(SpharrayError):
    """Malformed tensor, WAV, geometry, or scene file."""
