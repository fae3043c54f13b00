"""Geometric constructions on top of the frame sparsifier.

Three builders live here:

- ``approximate_john``: thin a John decomposition of the identity (unit
  contact points with weights summing, as outer products, to I) down to
  O(n/eps0^2) points while keeping both identity conditions exact.
- ``embed_l1``: embed an n-point subset of l1^d into l1^k, k = O(n/eps0^2),
  with multiplicative distance error in [1, 1+eps], through the cut-cone
  representation of the L1 metric.
- ``embed_lp_even``: for even p >= 4, select coordinates so that the p-norm
  of every vector in a given subspace is preserved within 1+eps, through a
  monomial lift of degree p/2.

Each output carries a numerically certified guarantee; failed certificates
raise instead of returning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
import scipy.linalg

from .bss import sparsify_frame, support_bound
from .errors import CertificationError
from .linalg import Frame, eigh, symmetrize

_JOHN_IDENTITY_TOL = 1e-8
_JOHN_CENTER_TOL = 1e-8
_JOHN_UNIT_TOL = 1e-10


def barrier_eps_for_ratio(ratio: float) -> float:
    """Accuracy eps0 whose sandwich ((1+eps0)/(1-eps0))^2 equals ``ratio``."""
    if not ratio > 1.0:
        raise ValueError(f"target ratio must exceed 1, got {ratio}")
    root = math.sqrt(ratio)
    return (root - 1.0) / (root + 1.0)


@dataclass
class JohnDecomposition:
    """Unit vectors and positive weights with Sum c_i x_i (x) x_i = I and Sum c_i x_i = 0."""

    dim: int
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != self.dim:
            raise ValueError(f"points must be (m, {self.dim}), got {self.points.shape}")
        if self.weights.shape != (self.points.shape[0],):
            raise ValueError("weights must align with points")
        if not np.all(self.weights > 0):
            raise ValueError("weights must be positive")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def identity_residual(self) -> float:
        total = symmetrize((self.points * self.weights[:, None]).T @ self.points)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def center_of_mass(self) -> np.ndarray:
        # exact summation: the true value is 0 for mirror-symmetric outputs
        weighted = self.points * self.weights[:, None]
        return np.array([math.fsum(weighted[:, c]) for c in range(self.dim)])

    def validate(self) -> None:
        residual = self.identity_residual()
        if residual > _JOHN_IDENTITY_TOL:
            raise ValueError(f"identity residual {residual:.3e} exceeds {_JOHN_IDENTITY_TOL:.1e}")
        center = float(np.max(np.abs(self.center_of_mass())))
        if center > _JOHN_CENTER_TOL:
            raise ValueError(f"center of mass {center:.3e} exceeds {_JOHN_CENTER_TOL:.1e}")
        norms = np.linalg.norm(self.points, axis=1)
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > _JOHN_UNIT_TOL:
            raise ValueError(f"point norm deviates from 1 by {worst:.3e}")


def approximate_john(jd: JohnDecomposition, eps: float) -> JohnDecomposition:
    """Thin a John decomposition to O(n/eps0^2) mirror-symmetric points.

    Reweights a subset J of the inputs so the weighted outer products sum
    to a matrix within eps/4 of the identity in operator norm, then maps
    the surviving points through the inverse square root and mirrors them.
    The output satisfies both decomposition identities: the identity
    residual is at machine precision and the center of mass is exactly
    zero by symmetry.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    jd.validate()
    eps0 = barrier_eps_for_ratio(1.0 + eps / 4.0)
    scaled = jd.points * np.sqrt(jd.weights)[:, None]
    frame = Frame(scaled, isotropy_certified=True)
    sparse = sparsify_frame(frame, eps0)
    lift = 1.0 / (1.0 - eps0) ** 2

    support = sparse.support
    if len(support) > support_bound(jd.dim, eps0):
        raise CertificationError("support exceeded its bound; barrier iteration misbehaved")
    s = np.array([sparse.weights[i] * lift for i in support])
    pts = jd.points[support]
    wts = jd.weights[support]

    total = symmetrize((pts * (s * wts)[:, None]).T @ pts)
    gap = float(np.max(np.abs(np.linalg.eigvalsh(total) - 1.0)))
    if gap > eps / 4.0 + 1e-9:
        raise CertificationError(f"reweighted sum is {gap:.3e} from the identity, over eps/4")

    decomp = eigh(total)
    inv_sqrt = (decomp.vectors / np.sqrt(decomp.values)) @ decomp.vectors.T
    mapped = pts @ inv_sqrt
    norms = np.linalg.norm(mapped, axis=1)
    directions = mapped / norms[:, None]
    half_weights = 0.5 * s * wts * norms**2

    points_out = np.vstack([directions, -directions])
    weights_out = np.concatenate([half_weights, half_weights])
    out = JohnDecomposition(jd.dim, points_out, weights_out)
    out.validate()
    return out


@dataclass
class CutDecomposition:
    """L1 metric on n points written as a weighted sum of cut pseudometrics.

    Each cut is a proper nonempty subset E with weight w_E > 0; the distance
    between points i and j is the total weight of cuts separating them.
    """

    n: int
    cuts: list[tuple[frozenset[int], float]]

    def __post_init__(self):
        seen = set()
        for subset, weight in self.cuts:
            if not subset or len(subset) >= self.n:
                raise ValueError("cuts must be proper nonempty subsets")
            if subset in seen:
                raise ValueError(f"duplicate cut {sorted(subset)}")
            if not weight > 0:
                raise ValueError("cut weights must be positive")
            seen.add(subset)

    @property
    def size(self) -> int:
        return len(self.cuts)

    def indicator_matrix(self) -> np.ndarray:
        out = np.zeros((len(self.cuts), self.n))
        for row, (subset, _) in enumerate(self.cuts):
            out[row, sorted(subset)] = 1.0
        return out

    def distances(self) -> np.ndarray:
        b = self.indicator_matrix()
        w = np.array([weight for _, weight in self.cuts])
        profiles = b.T  # row i marks the cuts containing point i
        return np.sum(w * np.abs(profiles[:, None, :] - profiles[None, :, :]), axis=2)


def cut_decompose(points: np.ndarray) -> CutDecomposition:
    """Exact cut-cone representation of the L1 metric of a finite point set.

    Thresholding each coordinate between consecutive distinct values yields
    cuts whose weighted sum telescopes back to every pairwise L1 distance;
    cuts with identical vertex subsets are merged.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError(f"need at least two points in a 2-D array, got shape {pts.shape}")
    n = pts.shape[0]
    merged: dict[frozenset[int], float] = {}
    for col in range(pts.shape[1]):
        values = pts[:, col]
        levels = np.unique(values)
        for low, high in zip(levels[:-1], levels[1:]):
            subset = frozenset(np.flatnonzero(values > low).tolist())
            merged[subset] = merged.get(subset, 0.0) + float(high - low)
    cuts = [(subset, weight) for subset, weight in sorted(merged.items(), key=lambda c: sorted(c[0]))]
    return CutDecomposition(n, cuts)


@dataclass
class EmbeddedPoints:
    """n points in R^k meant to be compared in the p-norm."""

    k: int
    points: np.ndarray
    p: float

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != self.k:
            raise ValueError(f"points must be (n, {self.k}), got {self.points.shape}")


def embed_l1(points: np.ndarray, eps: float) -> EmbeddedPoints:
    """Low-dimensional L1 embedding of a finite point set.

    The output lives in l1^k with k at most ceil(n / eps0^2) for
    eps0 = (sqrt(1+eps) - 1)/(sqrt(1+eps) + 1), and every pairwise distance
    satisfies  d(i,j) <= ||z_i - z_j||_1 <= (1+eps) d(i,j).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError(f"need at least two points, got shape {pts.shape}")
    n = pts.shape[0]
    decomposition = cut_decompose(pts)
    if decomposition.size == 0:
        # all points coincide; the zero embedding is exact
        return EmbeddedPoints(1, np.zeros((n, 1)), 1.0)
    eps0 = barrier_eps_for_ratio(1.0 + eps)
    indicators = decomposition.indicator_matrix()
    cut_weights = np.array([w for _, w in decomposition.cuts])
    frame = Frame(indicators * np.sqrt(cut_weights)[:, None])
    sparse = sparsify_frame(frame, eps0)
    lift = 1.0 / (1.0 - eps0) ** 2
    support = sparse.support
    scaled = np.array([sparse.weights[i] * lift for i in support]) * cut_weights[support]
    coords = indicators[support].T * scaled  # point i's row: s_E w_E 1_E(i)
    return EmbeddedPoints(len(support), coords, 1.0)


def embed_lp_even(basis: np.ndarray, p: int, eps: float) -> tuple[list[int], list[float]]:
    """Coordinate selection preserving p-norms on a subspace, p even >= 4.

    ``basis`` holds n linearly independent vectors (rows) spanning a
    subspace X of R^m.  Every coordinatewise product of p/2 basis vectors
    is collected into a lifted subspace Y of dimension d <= C(n+p/2-1, p/2);
    selecting coordinates that preserve squared sums on Y within a factor
    1 + eps*p/4 preserves p-norms on X within 1 + eps.  Returns the selected
    coordinate indices and their weights; applying
    x -> (s_i^(1/p) * x_i) for selected i realizes the embedding.

    The quadratic certificate on Y is verified by eigendecomposition, which
    covers every vector of X, not just sampled ones.
    """
    if p % 2 != 0 or p < 4:
        raise ValueError(f"exponent must be an even integer >= 4, got {p}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    u = np.asarray(basis, dtype=float)
    if u.ndim != 2:
        raise ValueError(f"basis must be a 2-D array, got shape {u.shape}")
    n, m = u.shape
    if np.linalg.matrix_rank(u) < n:
        raise ValueError("basis vectors are linearly dependent")

    half = p // 2
    monomials = np.stack(
        [np.prod(u[list(combo), :], axis=0) for combo in combinations_with_replacement(range(n), half)],
        axis=1,
    )  # (m, number of monomials)
    count = monomials.shape[1]
    q, r, _ = scipy.linalg.qr(monomials, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    threshold = count * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    d = int(np.count_nonzero(diag > threshold))
    if d == 0:
        raise ValueError("monomial lift collapsed to zero; basis is degenerate")
    assert d <= math.comb(n + half - 1, half)
    v = q[:, :d]

    frame = Frame(v, isotropy_certified=True)
    eps0 = barrier_eps_for_ratio(1.0 + eps * p / 4.0)
    sparse = sparsify_frame(frame, eps0)
    lift = 1.0 / (1.0 - eps0) ** 2
    selected = sparse.support
    weights = [sparse.weights[i] * lift for i in selected]

    rows = v[selected]
    certificate = symmetrize((rows * np.asarray(weights)[:, None]).T @ rows)
    lam = np.linalg.eigvalsh(certificate)
    hi = 1.0 + eps * p / 4.0
    if lam[0] < 1.0 - 1e-8 or lam[-1] > hi + 1e-8:
        raise CertificationError(
            f"lifted-space spectrum [{lam[0]:.12g}, {lam[-1]:.12g}] escapes [1, {hi:.12g}]"
        )
    return selected, weights


def apply_lp_embedding(x: np.ndarray, selected: list[int], weights: list[float], p: int) -> np.ndarray:
    """Realize the even-p coordinate embedding on one vector."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(weights, dtype=float)
    return w ** (1.0 / p) * x[list(selected)]
