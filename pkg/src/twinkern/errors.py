"""Exception types shared across the package."""


class TwinkernError(Exception):
    """Base class for every error raised by this package."""


class InvalidData(TwinkernError):
    """An input array contains NaN or infinite entries."""


class TooFewSamples(TwinkernError):
    """Fewer rows than the operation requires."""


class ShapeError(TwinkernError):
    """Array dimensions do not match the operation's contract."""


class DegenerateInput(TwinkernError):
    """A zero-norm row cannot be cosine-normalized."""


class InvalidWeightParam(TwinkernError):
    """Gegenbauer weight parameter must be strictly greater than -1/2."""


class DomainError(TwinkernError):
    """Argument lies outside the [-1, 1] domain of the polynomial basis."""


class InvalidCoefficients(TwinkernError):
    """Transform coefficients violate nonnegativity or the unit-norm constraint."""


class DegenerateObjective(TwinkernError):
    """The dependence matrix is identically zero; there is nothing to maximize."""


class IllConditionedKernel(TwinkernError):
    """Cholesky factorization failed even at the maximum jitter."""


class BarrierViolation(TwinkernError):
    """The log-barrier argument collapsed below the numerical floor."""


class OptimizationFailure(TwinkernError):
    """Every optimizer start produced a non-finite objective."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ParseError(TwinkernError):
    """CSV parsing failed; ``row`` and ``column`` locate the offending cell."""

    def __init__(self, message, row=None, column=None):
        detail = message
        if row is not None:
            detail += f" (row {row})"
        if column is not None:
            detail += f" (column {column!r})"
        super().__init__(detail)
        self.row = row
        self.column = column


class DivisionByZero(TwinkernError):
    """Denominator of the gain metric is not positive."""


class ConfigError(TwinkernError):
    """Experiment configuration is invalid or references missing files."""
