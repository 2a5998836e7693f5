"""Exception hierarchy shared across the package."""


class MpcNetError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MpcNetError):
    """Operand shapes are inconsistent."""


class InvalidProblem(MpcNetError):
    """Problem data violates a structural requirement (symmetry, definiteness, finiteness)."""


class NotPositiveDefinite(MpcNetError):
    """A matrix required to be positive definite failed its Cholesky pivot test."""


class NoConvergence(MpcNetError):
    """An iterative method exhausted its iteration budget."""


class Infeasible(MpcNetError):
    """No active set yields a valid complementarity solution."""


class ReconstructionMismatch(MpcNetError):
    """relu(y) disagrees with the multiplier it should reproduce; instance is degenerate."""


class SingularActiveSet(MpcNetError):
    """Active constraint rows are linearly dependent."""


class ControllerFailure(MpcNetError):
    """A closed-loop controller failed at some step; carries the step index."""

    def __init__(self, step, cause):
        super().__init__(f"controller failed at step {step}: {cause}")
        self.step = step
        self.cause = cause


class UnstableRegion(MpcNetError):
    """A region's closed-loop matrix has spectral radius >= 1; no Lyapunov solution."""


class NotFound(MpcNetError):
    """Cost search exhausted its grid without a feasible candidate."""
