"""Error types for polymoments.

Every error carries the exit status the command line reports for it and a
short machine-readable type used in the JSON error payload.
"""


class MomentError(Exception):
    """Base class for all polymoments errors (invalid input by default)."""

    exit_code = 2
    error_type = "validation_error"


class DimensionError(MomentError):
    """Raised when shapes, variable counts or truncation orders disagree."""


class NonInvertibleError(MomentError):
    """Raised when a series or matrix that must be inverted is singular."""


class NormalizationError(MomentError):
    """Raised when a series or vector does not have the required constant term."""


class GeometryError(MomentError):
    """Raised for invalid polytopes, facets or apex points."""


class MissingDataError(MomentError):
    """Raised when a moment or cumulant needed by an operation is absent."""


class InsufficientDataError(MomentError):
    """Raised when too few moments are supplied for a Hankel construction."""


class PoleError(MomentError):
    """Raised when a rational function is evaluated at a zero of its denominator."""


class DegeneracyError(MomentError):
    """Raised for zero-volume or otherwise degenerate configurations."""

    exit_code = 3
    error_type = "degeneracy_error"


class RecoveryError(DegeneracyError):
    """Raised when an inverse problem has no unique exact solution."""


class UnsupportedDegeneracyError(DegeneracyError):
    """Raised for coincident or irrational knots where a density is requested."""


class InconsistencyError(DegeneracyError):
    """Raised when a moment-matching system has no exact solution."""


class DataIntegrityError(MomentError):
    """Raised when an embedded data file fails its checksum, parse or grading check."""

    exit_code = 3
    error_type = "data_integrity_error"


class ConfigurationError(MomentError):
    """Raised when invariant normalizations cannot be resolved."""

    exit_code = 3
    error_type = "configuration_error"


class UsageError(MomentError):
    """Raised for malformed command lines."""

    exit_code = 64
    error_type = "usage_error"


def create_error_response(error_type: str, message: str) -> dict:
    """Create a standardized error payload.

    Args:
        error_type: Type of error (e.g., "degeneracy_error")
        message: Human-readable error message

    Returns:
        Dictionary matching the ErrorResponse schema
    """
    return {"type": "error", "error": {"type": error_type, "message": message}}
