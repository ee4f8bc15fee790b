"""Exception hierarchy shared by every module."""


class GptCommitError(Exception):
    """Base class for all package errors."""


class ContractViolation(GptCommitError, ValueError):
    """Inputs break a documented precondition (shapes, kinds, tolerances)."""


class NumericalFailure(GptCommitError, RuntimeError):
    """An iterative routine did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedScale(GptCommitError):
    """Problem exceeds the hard limits of an exhaustive routine."""


class UnsupportedCombination(GptCommitError):
    """The requested composition rule does not apply to these cone kinds."""


class UnsupportedTheory(GptCommitError):
    """A constructive step exists only for quantum-type systems."""


class InvalidProtocol(GptCommitError):
    """Protocol data fails validation (e.g. honest acceptance not above 1/2)."""


class ImpossibilityInapplicable(GptCommitError):
    """The No-Restriction Hypothesis fails, so the trade-off cannot be invoked."""


class ParseError(GptCommitError, ValueError):
    """A protocol or program file is malformed; the message names the field."""
