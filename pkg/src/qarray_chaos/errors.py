"""Exception types raised across the package."""


class ParameterDomainError(ValueError):
    """A physical or numerical parameter lies outside its allowed range."""


class SizeError(ValueError):
    """A Hilbert-space dimension exceeds the configured cap."""


class GraphError(ValueError):
    """Invalid connectivity graph (self-loop, duplicate edge, disconnected...)."""


class NumericalError(RuntimeError):
    """Eigensolver or other numerical routine failed."""


class ConvergenceError(RuntimeError):
    """Iterative solver did not converge.

    Attributes
    ----------
    residuals : list
        Residual history (last entry is the final residual).
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class NoCrossingError(ValueError):
    """Observable curve never crosses the requested threshold."""


class SelectionError(RuntimeError):
    """Counter-rotating eigenvalue selection kept the wrong number of levels."""


class SpecError(ValueError):
    """Run-spec parse or validation failure."""


class ResonanceError(ParameterDomainError):
    """A perturbative denominator vanishes."""


class IdentificationError(RuntimeError):
    """Eigenvalues of interest cannot be singled out unambiguously."""
