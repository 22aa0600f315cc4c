"""Exception hierarchy shared by the solver modules."""


class TFPSError(Exception):
    """Base class for all solver errors."""


class ValidationError(TFPSError, ValueError):
    """Invalid user input (parameters, configuration, provenance)."""


class AmbiguousDerivativeError(TFPSError):
    """Derivative requested exactly at a breakpoint without a side flag."""


class ResolutionError(TFPSError):
    """Root scan could not separate roots after the maximal subdivision depth."""


class DegenerateLevelSetError(TFPSError):
    """The level set is a continuum (the function is flat at the requested level)."""


class DegenerateThresholdError(TFPSError):
    """Mixed densities requested at the threshold alpha == 1."""


class NonPhysicalError(TFPSError):
    """Configuration with negative densities (alpha inside the forbidden interval)."""


class InfeasibleTopologyError(TFPSError):
    """A wall topology cannot be realized for the given parameters."""


class ConvergenceError(TFPSError):
    """Iterative solve did not converge; carries the last residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class PreconditionError(TFPSError):
    """An operation was called on input violating its precondition."""


class DegenerateContinuumError(TFPSError):
    """Stationary walls form a continuum (phi constant at the wall level)."""
