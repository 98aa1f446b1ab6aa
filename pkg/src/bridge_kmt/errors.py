"""Exception hierarchy.

Two roots: SpecError for bad inputs (CLI exit code 2) and NumericError for
computations that ran but could not produce a trustworthy value (exit code 3).
"""


class SpecError(ValueError):
    """Invalid parameters, malformed distribution specs, out-of-domain requests."""


class NumericError(RuntimeError):
    """A numerical procedure failed: no convergence, underflow, unusable grid."""


class SlopeOutOfRangeError(SpecError):
    """Requested slope lies outside the attainable open range (alpha, beta)."""


class SaddleConvergenceError(NumericError):
    """Saddle-point solve did not converge within the iteration budget."""


class GridTooCoarseError(NumericError):
    """Grid-based density drifted beyond tolerance against a refinement."""


class TableUnderflowError(NumericError):
    """A conditional slice carries no representable mass at the requested endpoint."""
