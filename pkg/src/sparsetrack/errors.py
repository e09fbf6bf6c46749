"""Exception hierarchy shared by every module."""


class SparseTrackError(Exception):
    """Base class for all library errors."""


class ShapeError(SparseTrackError, ValueError):
    """Dimensions of the inputs do not agree."""


class InvalidParameterError(SparseTrackError, ValueError):
    """A scalar parameter is outside its admissible range."""


class AssumptionViolation(SparseTrackError, ValueError):
    """The step-size condition tau * ||A||_2^2 <= 1 does not hold."""

    def __init__(self, message, round_index=None, ratio=None):
        super().__init__(message)
        self.round_index = round_index
        self.ratio = ratio


class ConvergenceError(SparseTrackError, RuntimeError):
    """An iterative routine hit its iteration cap before meeting its tolerance.

    ``estimate`` carries the best value found so far (a float for
    :func:`spectral_norm`, a :class:`BatchSolveReport` for ``batch_solve``).
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class OracleFailure(SparseTrackError, RuntimeError):
    """The minimizer oracle did not converge on some round."""

    def __init__(self, message, round_index=None):
        super().__init__(message)
        self.round_index = round_index


class SimulationDivergence(SparseTrackError, RuntimeError):
    """The simulated TVARX output blew up."""


class UnsupportedOperation(SparseTrackError, RuntimeError):
    """The requested computation needs data that is not available."""

