"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid billiard or experiment configuration."""


class GeometryError(RuntimeError):
    """A trajectory left the billiard domain."""


class InsufficientDataError(ValueError):
    """Not enough data to form a statistically meaningful estimate."""


class FitError(RuntimeError):
    """A regression could not be performed on the requested window."""


class QuadratureError(RuntimeError):
    """Numerical quadrature failed to reach the requested accuracy."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to converge."""


class SchemaError(ValueError):
    """A persisted artifact does not match the expected layout."""


class DependencyError(RuntimeError):
    """A required upstream artifact is missing."""


class TruncationWarning(UserWarning):
    """Basis truncation noticeably moves eigenvalues in the working window."""
