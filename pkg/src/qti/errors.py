"""Exception types shared across the package.

ConfigError maps to CLI exit code 2, every other QtiError to exit code 3.
"""


class QtiError(Exception):
    """Base class for all package errors."""


class ConfigError(QtiError):
    """Invalid or inconsistent configuration (bad field, unknown key, parse failure)."""


class DimensionError(QtiError):
    """Mismatched array lengths between coupled quantities."""


class OrderOverflowError(QtiError):
    """Hermite order outside the supported range."""


class InvalidGridError(QtiError):
    """Quadrature or discretization grid is empty or malformed."""


class DivergenceError(QtiError):
    """Trajectory left the finite range, usually a too-large time step."""


class OracleError(QtiError):
    """Reference eigensolver failed."""


class InvalidTransitionError(QtiError):
    """Proposed level vector is outside the allowed neighbor set."""


class InvalidDistributionError(QtiError):
    """Discrete distribution is unnormalized or has negative weights."""


class DegeneratePosteriorError(QtiError):
    """Posterior weights vanished everywhere on the quadrature grid."""


class DegenerateDesignError(QtiError):
    """Slope fit requested on a design with no spread in the predictor."""
