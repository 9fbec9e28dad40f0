"""Exception hierarchy shared by all grabmdm modules."""


class GrabMDMError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(GrabMDMError, ValueError):
    """An argument is outside its admissible range."""


class DomainError(ParameterError):
    """A function was evaluated outside its domain (e.g. a negative kernel argument)."""


class ShapeError(GrabMDMError, ValueError):
    """Array shapes are inconsistent."""


class DegeneracyError(GrabMDMError, ArithmeticError):
    """A normalizer vanished (zero degree, zero bandwidth, ...)."""


class NumericError(GrabMDMError, ArithmeticError):
    """A numerical routine failed to converge.

    Attributes
    ----------
    diagnostics : dict
        Solver-specific details (matrix size, LAPACK info, ...).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class GenerationError(GrabMDMError, ValueError):
    """Synthetic data generation hit an invalid configuration."""
