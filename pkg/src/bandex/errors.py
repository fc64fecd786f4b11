"""Exception hierarchy shared across the package."""


class BandexError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(BandexError, ValueError):
    """An argument violates an operation's preconditions."""


class ValidationError(ParameterError):
    """A composite input breaks an invariant; the message names the offender."""


class ContractViolationError(BandexError):
    """An iteration step received a signal outside the bandlimited subspace."""


class InternalConsistencyError(BandexError):
    """An internal algebraic guarantee failed (e.g. a non-Hermitian mask)."""


class ConvergenceError(BandexError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DivergenceError(BandexError):
    """The extrapolation iteration blew up.  Carries the last finite report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SynthesisError(BandexError):
    """A synthetic-signal request is degenerate (e.g. no out-of-band energy)."""


class UndefinedMetricError(BandexError):
    """A ratio metric is undefined for the given input (zero denominator)."""


class FormatError(BandexError):
    """A serialized artifact is malformed; the message names the byte offset."""


class ConfigError(BandexError):
    """A configuration document failed validation.

    ``errors`` is a list of ``(path, message)`` pairs, one per violation.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        detail = "; ".join(f"{path}: {message}" for path, message in self.errors)
        super().__init__(f"invalid configuration: {detail}")
