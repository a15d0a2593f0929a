"""Exception hierarchy shared by all modules."""


class NGRayleighError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(NGRayleighError, ValueError):
    """Invalid exponents, norm tuples, grids or configuration values."""


class DomainError(NGRayleighError, ValueError):
    """An argument lies outside the domain of the requested function."""


class UnsupportedRegimeError(NGRayleighError):
    """The exponent regime does not guarantee the requested structure."""


class BracketError(NGRayleighError, ArithmeticError):
    """Root bracketing failed; ``diagnostics`` holds the last probes."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class BandViolation(NGRayleighError):
    """The requested fiber root does not exist for the current field."""
