"""Dense symmetric linear algebra kernel.

Everything downstream (barrier iterations, graph certificates, embeddings)
is built on the handful of operations here: descending-order
eigendecomposition, positive-definite resolvent solves, rank-one inverse
update identities, and whitening of a vector frame to an exact
decomposition of the identity.

Matrices are plain float64 ``numpy`` arrays and are required to be stored
exactly symmetric (``M[i, j] == M[j, i]`` bitwise).  All functions are pure;
nothing here mutates its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    EigenConvergenceError,
    NotPositiveDefiniteError,
    SingularUpdateError,
    ZeroFrameError,
)

# Max-entry tolerance under which a frame counts as a decomposition of the identity.
ISOTROPY_TOL = 1e-8

_RECONSTRUCT_TOL = 1e-10
_ORTHONORMAL_TOL = 1e-10
_SOLVE_TOL = 1e-10


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return 0.5*(M + M^T), which is exactly symmetric in floating point."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def require_symmetric(m: np.ndarray, context: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{context} must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError(f"{context} must have order >= 1")
    if not np.array_equal(m, m.T):
        residual = float(np.max(np.abs(m - m.T)))
        raise ValueError(
            f"{context} must be stored exactly symmetric "
            f"(max asymmetry {residual:.3e}); use symmetrize() first"
        )
    return m


@dataclass
class Frame:
    """An ordered list of m vectors in R^n, stored as the rows of ``vectors``.

    ``isotropy_certified`` records that the sum of outer products of the rows
    equals the identity to within ``ISOTROPY_TOL`` in max-entry norm; the flag
    is re-verified at construction time.
    """

    vectors: np.ndarray
    isotropy_certified: bool = False

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"frame vectors must be a 2-D array, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"frame needs at least one vector and one dimension, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("frame vectors must be finite")
        self.vectors = v
        if self.isotropy_certified:
            residual = float(np.max(np.abs(self.gram() - np.eye(v.shape[1]))))
            if residual > ISOTROPY_TOL:
                raise ValueError(
                    f"frame claimed isotropic but identity residual is {residual:.3e} "
                    f"(tolerance {ISOTROPY_TOL:.1e})"
                )

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        """Sum of outer products of the frame vectors, exactly symmetric."""
        return symmetrize(self.vectors.T @ self.vectors)


@dataclass
class EigenDecomposition:
    """Eigenvalues in descending order with matching orthonormal eigenvectors.

    ``vectors[:, k]`` is the unit eigenvector for ``values[k]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass
class ReductionMap:
    """Invertible change of coordinates between a frame's span and R^r.

    ``matrix`` has shape (n, r).  ``to_reduced`` carries a direction w in the
    original space to the coordinates in which the reduced frame lives, so
    that quadratic forms match: sum_i <x_i, w>^2 == sum_i <y_i, to_reduced(w)>^2
    for w in the span.  ``lift`` inverts it on the span, mapping reduced
    vectors back to the original space (lift(y_i) == x_i).
    """

    matrix: np.ndarray

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    def to_reduced(self, w: np.ndarray) -> np.ndarray:
        return self.matrix.T @ np.asarray(w, dtype=float)

    def lift(self, y: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(y, dtype=float)


def eigh(m: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Delegates to the LAPACK symmetric driver (tridiagonalization plus
    implicitly shifted iteration with its fixed internal sweep cap); hitting
    that cap raises EigenConvergenceError naming the matrix order and the
    off-diagonal residual.  The output is validated: the spectral
    reconstruction must match the input to 1e-10 relative max-entry norm and
    the eigenvector set must be orthonormal to 1e-10, otherwise
    EigenConvergenceError is raised as well.
    """
    m = require_symmetric(m)
    n = m.shape[0]
    off = float(np.max(np.abs(m - np.diag(np.diag(m))))) if n > 1 else 0.0
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(n, off, str(exc)) from exc
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    decomp = EigenDecomposition(values, vectors)
    scale = 1.0 + float(np.max(np.abs(m)))
    recon_err = float(np.max(np.abs(decomp.reconstruct() - m)))
    if recon_err > _RECONSTRUCT_TOL * scale:
        raise EigenConvergenceError(n, off, f"reconstruction residual {recon_err:.3e}")
    ortho_err = float(np.max(np.abs(vectors.T @ vectors - np.eye(n))))
    if ortho_err > _ORTHONORMAL_TOL:
        raise EigenConvergenceError(n, off, f"orthonormality residual {ortho_err:.3e}")
    return decomp


def _cholesky(m: np.ndarray, context: str):
    try:
        return scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        smallest = float(np.linalg.eigvalsh(m)[0])
        raise NotPositiveDefiniteError(smallest, context) from exc


def resolvent_apply(m: np.ndarray, shift: float, sign: str, rhs: np.ndarray) -> np.ndarray:
    """Apply (shift*I - M)^-1 (sign="upper") or (M - shift*I)^-1 (sign="lower").

    ``rhs`` may be a single vector of length n or an (n, k) array of columns;
    one internal Cholesky factorization is shared by every column.  Solutions
    are refined until the relative residual per column is at most 1e-10.
    """
    m = require_symmetric(m)
    n = m.shape[0]
    if sign == "upper":
        shifted = shift * np.eye(n) - m
    elif sign == "lower":
        shifted = m - shift * np.eye(n)
    else:
        raise ValueError(f"sign must be 'upper' or 'lower', got {sign!r}")

    rhs = np.asarray(rhs, dtype=float)
    single = rhs.ndim == 1
    b = rhs.reshape(n, 1) if single else rhs
    if b.shape[0] != n:
        raise ValueError(f"rhs has leading dimension {b.shape[0]}, expected {n}")

    factor = _cholesky(shifted, f"resolvent solve (sign={sign}, shift={shift:g})")
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    b_norm = np.maximum(np.linalg.norm(b, axis=0), np.finfo(float).tiny)
    for _ in range(3):
        residual = b - shifted @ x
        rel = np.linalg.norm(residual, axis=0) / b_norm
        if np.max(rel) <= _SOLVE_TOL:
            break
        x = x + scipy.linalg.cho_solve(factor, residual, check_finite=False)
    else:
        raise NotPositiveDefiniteError(
            float(np.linalg.eigvalsh(shifted)[0]),
            f"resolvent solve did not reach relative residual {_SOLVE_TOL:.1e}",
        )
    return x[:, 0] if single else x


def sherman_morrison_inverse_update(m_inv: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Given M^-1, return (M + z (x) z)^-1 by the Sherman-Morrison formula.

    The result is exactly symmetric by construction.  Raises
    SingularUpdateError when the update denominator 1 + <M^-1 z, z> is
    smaller than 1e-12 in magnitude.
    """
    m_inv = require_symmetric(m_inv, "inverse matrix")
    z = np.asarray(z, dtype=float)
    u = m_inv @ z
    denom = 1.0 + float(u @ z)
    if abs(denom) < 1e-12:
        raise SingularUpdateError(
            f"rank-one update denominator {denom:.3e} below 1e-12; update is singular"
        )
    return m_inv - np.outer(u, u) / denom


def trace_after_rank_one(
    m_inv_trace: float,
    m_inv_z: np.ndarray,
    m_inv2_z_dot_z: float,
    z: np.ndarray,
) -> float:
    """Trace of (M + z (x) z)^-1 from quantities already solved against M.

    Takes tr(M^-1), the vector M^-1 z, and the scalar <M^-2 z, z>; this is
    the trace of the Sherman-Morrison identity, so no new factorization is
    needed.
    """
    m_inv_z = np.asarray(m_inv_z, dtype=float)
    z = np.asarray(z, dtype=float)
    denom = 1.0 + float(m_inv_z @ z)
    if abs(denom) < 1e-12:
        raise SingularUpdateError(
            f"rank-one trace denominator {denom:.3e} below 1e-12; update is singular"
        )
    return float(m_inv_trace) - float(m_inv2_z_dot_z) / denom


def isotropic_reduce(frame: Frame, rank_tol: float | None = None) -> tuple[Frame, ReductionMap]:
    """Whiten a frame to an exact decomposition of the identity on its span.

    Computes A = sum_i x_i (x) x_i, eigendecomposes it, discards eigenvalues
    below ``rank_tol`` times the largest one, and rescales the frame into the
    r-dimensional range coordinates.  A final symmetric correction makes the
    reduced Gram matrix equal the identity to machine precision, so the
    returned frame is isotropy-certified.  The accompanying ReductionMap
    converts directions between the two coordinate systems.

    ``rank_tol`` defaults to n times the machine epsilon.
    """
    n = frame.ambient_dim
    if rank_tol is None:
        rank_tol = n * np.finfo(float).eps
    decomp = eigh(frame.gram())
    lam = decomp.values
    if lam[0] <= 0.0:
        raise ZeroFrameError("frame has no positive-energy direction; all vectors are zero")
    keep = lam > rank_tol * lam[0]
    r = int(np.count_nonzero(keep))
    if r == 0:
        raise ZeroFrameError("all frame eigenvalues fall below the rank tolerance")
    lam_r = lam[:r]
    v_r = decomp.vectors[:, :r]
    scale = np.sqrt(lam_r)

    reduced = frame.vectors @ (v_r / scale)
    # One Newton-style correction of the reduced Gram matrix; without it the
    # certificate can drift when the discarded/kept eigenvalue gap is narrow.
    gram = symmetrize(reduced.T @ reduced)
    gd = eigh(gram)
    if gd.values[-1] <= 0.0:
        raise ZeroFrameError("reduced frame lost rank during whitening")
    inv_sqrt = (gd.vectors / np.sqrt(gd.values)) @ gd.vectors.T
    sqrt_gram = (gd.vectors * np.sqrt(gd.values)) @ gd.vectors.T
    reduced = reduced @ inv_sqrt
    lift = (v_r * scale) @ sqrt_gram

    out = Frame(reduced, isotropy_certified=True)
    return out, ReductionMap(matrix=lift)
