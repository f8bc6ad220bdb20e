"""Exception hierarchy shared across the package.

Two families matter at the CLI boundary: ValidationError (bad data,
files, or arguments; exit code 1) and BackendError (scorer backend or
wire-protocol failures; exit code 2).
"""


class RelsumError(Exception):
    """Base class for all package errors."""


class ValidationError(RelsumError):
    """Malformed data, configuration, or arguments."""


class BackendError(RelsumError):
    """Scorer backend or wire-protocol failure."""


class CapabilityError(BackendError):
    """Backend does not support the requested operation."""


class DegenerateDistributionError(BackendError):
    """Sibling probability mass is zero where renormalization needs it."""
