"""Exception types shared across the package."""


class VoroprojError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(VoroprojError, ValueError):
    """Operands do not share the same ambient dimension."""


class NumericFailureError(VoroprojError, RuntimeError):
    """An iterative routine failed to converge.

    Carries a ``diagnostics`` dict with whatever state the solver had when
    it gave up (iteration counts, residuals, brackets).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EmptySetError(VoroprojError, ValueError):
    """A polyhedron turned out to be empty where a nonempty set was required."""


class InconsistentMeasurementError(VoroprojError, ValueError):
    """A measurement set provably does not intersect the prior estimate.

    Only possible when the caller's bounded-noise guarantee is violated.
    """


class ScenarioError(VoroprojError, ValueError):
    """A scenario file failed to parse or validate."""
