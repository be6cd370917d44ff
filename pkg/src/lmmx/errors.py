"""Exception hierarchy shared by all lmmx modules."""


class LmmError(Exception):
    """Base class for all lmmx errors."""


class DimensionError(LmmError):
    """Array shapes do not match the network or each other."""


class ParameterError(LmmError):
    """A parameter value is outside its valid range."""


class NumericError(LmmError):
    """Non-finite values where finite ones are required."""


class DataError(LmmError):
    """A dataset violates its invariants (empty class, bad labels, ...)."""


class FormatError(LmmError):
    """A file does not conform to its on-disk format."""


class CalibrationError(LmmError):
    """Temperature calibration cannot reach the requested confidence."""


class UnsupportedConfigError(LmmError):
    """The operation is not defined for this network configuration."""
