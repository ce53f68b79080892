"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside its documented domain."""


class GridMismatchError(ValueError):
    """Two objects were built on incompatible velocity grids."""


class DomainTruncationError(ValueError):
    """A query reaches outside the truncated velocity domain."""


class UnstableStepError(RuntimeError):
    """A time step produced non-finite values (or positivity retries ran out).

    Carries the offending step size in ``dt`` and, when raised from
    ``integrate``, the partial trajectory in ``partial_log``.
    """

    def __init__(self, message, dt=None, partial_log=None):
        super().__init__(message)
        self.dt = dt
        self.partial_log = partial_log


class CoverageError(ValueError):
    """A snapshot history does not cover the requested time interval."""

    def __init__(self, message, missing_interval=None):
        super().__init__(message)
        self.missing_interval = missing_interval


class SnapshotFormatError(ValueError):
    """A snapshot file has an unrecognized magic or version."""


class ConfigError(ValueError):
    """A run configuration file is malformed or incomplete.

    ``key`` names the offending dotted key, ``line`` the source line when the
    problem is syntactic.
    """

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


class ConfigurationError(ConfigError):
    """Structural constants form an undefined combination (e.g. K <= c0)."""
