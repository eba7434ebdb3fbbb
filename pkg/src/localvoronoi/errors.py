"""Exception hierarchy.

The CLI maps these onto exit codes: :class:`SpecError` -> 2,
:class:`DataError` -> 3, :class:`NumericError` -> 4.
"""


class LocalVoronoiError(Exception):
    pass


class SpecError(LocalVoronoiError, ValueError):
    """Invalid functional-equation data or invalid parameters."""


class DataError(LocalVoronoiError, ValueError):
    """Malformed or structurally invalid coefficient data."""

    def __init__(self, message, line=None, index=None):
        super().__init__(message)
        self.line = line
        self.index = index


class InsufficientDataError(DataError):
    """The stream does not reach far enough for the requested evaluation."""

    def __init__(self, message, required_lambda=None):
        super().__init__(message)
        self.required_lambda = required_lambda


class ThresholdError(SpecError):
    """Evaluation point lies below a configured lower threshold."""


class NumericError(LocalVoronoiError, ArithmeticError):
    """Numerical procedure did not converge or hit a singularity."""


class SingularityError(NumericError):
    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class FitError(NumericError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OscillationTooFastError(NumericError):
    """Quadrature node ceiling exceeded; the caller should truncate earlier."""


class TruncationError(NumericError):
    """Tail bound could not be pushed below tolerance within ``max_terms``."""

    def __init__(self, message, achieved_bound=None, terms=None):
        super().__init__(message)
        self.achieved_bound = achieved_bound
        self.terms = terms
