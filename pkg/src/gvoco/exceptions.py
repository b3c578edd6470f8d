"""Exception hierarchy shared across the package."""


class GvocoError(Exception):
    """Base class for every error raised by gvoco."""


class InputError(GvocoError, ValueError):
    """An argument has the wrong shape, sign or value."""


class ConfigError(GvocoError, ValueError):
    """A configuration block cannot be turned into a valid object."""


class CapabilityError(GvocoError):
    """The requested computation is not available for this object."""


class InvariantViolation(GvocoError):
    """A runtime invariant failed.

    ``round`` is the first offending round when known.
    """

    def __init__(self, message, round=None, name=None):
        super().__init__(message)
        self.round = round
        self.name = name


class NumericalDiagnostic(GvocoError):
    """An iterative solver stopped without meeting its tolerance.

    Carries the last iterate and residual so callers can inspect them.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
