"""Exception hierarchy shared across the toolkit.

Every error carries a short machine-readable ``kind`` so the command line
front end can report it on a single parsable line.
"""


class SounderError(Exception):
    kind = "error"


class ParameterError(SounderError, ValueError):
    """A parameter violates a type invariant."""

    kind = "parameter"


class InputError(SounderError, ValueError):
    """An operation received unusable input data."""

    kind = "input"


class DomainError(SounderError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    kind = "domain"


class GeometryError(SounderError, ValueError):
    """Degenerate link geometry, e.g. coincident transmitter and receiver."""

    kind = "geometry"


class FitError(SounderError, ValueError):
    """A model fit is ill-posed for the supplied data."""

    kind = "fit"


class DivergenceError(SounderError, RuntimeError):
    """A trajectory follower lost the path.

    The partial trace up to the divergence point is kept in ``trace``.
    """

    kind = "divergence"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class TuningError(SounderError, RuntimeError):
    """No follower configuration satisfied the tuning constraints."""

    kind = "tuning"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else []


class ConfigError(SounderError, ValueError):
    """Invalid campaign configuration; ``fields`` names the offending keys."""

    kind = "config"

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class PersistenceError(SounderError, OSError):
    kind = "persistence"
