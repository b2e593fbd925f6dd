"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input/config problems exit with 2,
numerical failures with 1.
"""


class BlindciteError(Exception):
    """Base class for all package errors."""


class ValidationError(BlindciteError, ValueError):
    """Raised when input data violates a documented invariant or schema."""


class ConfigError(BlindciteError, ValueError):
    """Raised when a configuration value is out of its allowed range."""


class ShapeError(BlindciteError, ValueError):
    """Raised when matrix or vector dimensions do not line up."""


class NumericalError(BlindciteError, RuntimeError):
    """Raised when a fit fails numerically (rank deficiency, divergence)."""
