"""Exception and warning types shared across the package."""


class GaussboundError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(GaussboundError, ValueError):
    pass


class DimensionMismatchError(GaussboundError, ValueError):
    pass


class ParameterRangeError(GaussboundError, ValueError):
    pass


class StateSpecError(GaussboundError, ValueError):
    """Malformed state description (constructor spec or state file)."""


class DegenerateMomentsError(GaussboundError):
    """Covariance matrix with non-positive determinant."""


class TruncationError(GaussboundError):
    """Population lost past the Fock cutoff exceeds the allowed threshold."""


class ConsistencyError(GaussboundError):
    """Redundantly stored quantities disagree."""


class TruncationWarning(UserWarning):
    pass
