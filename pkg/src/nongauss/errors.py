"""Exception types shared across the package."""


class NongaussError(Exception):
    """Base class for all package errors."""


class DomainError(NongaussError, ValueError):
    """A parameter is outside its physical or mathematical domain."""


class PrecisionError(NongaussError, RuntimeError):
    """A numerical routine could not reach its accuracy target.

    Attributes
    ----------
    suggested_cutoff : int or None
        For truncated-basis routines, a cutoff expected to suffice.
    """

    def __init__(self, message, suggested_cutoff=None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


class SolverError(NongaussError, RuntimeError):
    """An optimization failed to converge.

    Carries the best iterate found so callers can inspect or restart.
    """

    def __init__(self, message, best_point=None, best_value=None):
        super().__init__(message)
        self.best_point = best_point
        self.best_value = best_value


class FitError(NongaussError, RuntimeError):
    """A model fit failed or produced out-of-domain parameters."""


class FormatError(NongaussError, ValueError):
    """A file or payload does not match the expected schema."""
