"""Exception and warning types shared across the package."""


class ZeroNormError(ValueError):
    """A state collapsed to (numerically) zero norm, e.g. an impossible post-selection."""


class ShapeMismatchError(ValueError):
    """Operands do not share the same mode count / cutoff / grid."""


class ModeOutOfRangeError(IndexError):
    """A mode index does not exist on the given state."""


class MultiModeInputError(ValueError):
    """A single-mode quantity was requested for a multimode state."""


class GridMismatchError(ValueError):
    """Two phase-space grids do not coincide."""


class GridTooCoarseError(ValueError):
    """A position grid cannot resolve the state it is asked to represent."""


class CutoffTooSmallError(ValueError):
    """The Fock cutoff cannot hold the requested state."""


class LengthMismatchError(ValueError):
    """A flat parameter vector has the wrong length for its architecture."""


class EtaZeroError(ValueError):
    """Loss-channel Kraus formula is singular at zero transmission."""


class DegeneratePError(ValueError):
    """Farm math is undefined for a degenerate per-gadget probability."""


class UnboundedError(OverflowError):
    """A gadget count exceeds the supported range."""


class NonFiniteLossError(FloatingPointError):
    """An objective returned NaN/Inf where a finite value is required."""


class TruncationRiskWarning(UserWarning):
    """Gate parameters are large enough that the Fock truncation degrades accuracy."""
