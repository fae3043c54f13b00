"""Exception types shared across the toolkit."""

from __future__ import annotations


class RforgeError(Exception):
    """Base class for all toolkit-specific failures."""


class EigenConvergenceError(RforgeError):
    """The symmetric eigensolver failed to converge or to reproduce its input."""

    def __init__(self, order: int, off_diagonal_residual: float, detail: str = ""):
        self.order = order
        self.off_diagonal_residual = off_diagonal_residual
        msg = (
            f"eigendecomposition failed for matrix of order {order} "
            f"(off-diagonal residual {off_diagonal_residual:.3e})"
        )
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NotPositiveDefiniteError(RforgeError):
    """A matrix that a barrier invariant promised to be positive definite is not.

    Carries the smallest pivot (smallest eigenvalue of the offending matrix)
    so callers can see how badly the invariant was violated.
    """

    def __init__(self, smallest_pivot: float, context: str = ""):
        self.smallest_pivot = smallest_pivot
        msg = f"matrix is not positive definite (smallest pivot {smallest_pivot:.6e})"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class SingularUpdateError(RforgeError):
    """A rank-one inverse update hit a vanishing denominator."""


class ZeroFrameError(RforgeError):
    """Every vector of a frame lies below the rank tolerance."""


class BarrierInvariantError(RforgeError):
    """A barrier-iteration invariant failed; signals numerical breakdown."""


class SelectionInvariantError(RforgeError):
    """A column-selection invariant failed; signals numerical breakdown."""


class CertificationError(RforgeError):
    """An output failed its own quality certificate."""
