"""Exception types raised across the package."""


class LrmmError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LrmmError, ValueError):
    """An input has the wrong shape, rank, or an out-of-range parameter."""


class DegenerateSpectrum(LrmmError, ArithmeticError):
    """A required singular value or spectral gap is numerically zero."""


class NonFiniteError(LrmmError, ArithmeticError):
    """An iterate or input contains NaN or infinity."""


class MissingLabels(LrmmError, ValueError):
    """An operation needs mixture labels but the sample set has none."""


class TooFewSamples(LrmmError, ValueError):
    """Not enough samples for the requested operation."""


class BruteForceTooLarge(LrmmError, ValueError):
    """Exhaustive enumeration would exceed the configuration cap."""


class InsufficientPoints(LrmmError, ValueError):
    """A trend fit needs at least two usable grid points."""


class ParseError(LrmmError, ValueError):
    """A text input file is malformed; the message carries the line number."""


class IndexOutOfRange(LrmmError, ValueError):
    """A node index exceeds the declared node count."""


class EmptyStack(LrmmError, ValueError):
    """A layer stack has too few layers to be centered."""


class LabelMismatch(LrmmError, ValueError):
    """A community label file does not cover the node set exactly."""
