"""Weighted graphs, Laplacians, graph sparsification, and its certificate.

A graph on n vertices is reduced to the frame of scaled edge-difference
vectors sqrt(w) * (e_i - e_j); sparsifying that frame and pulling the
weights back yields a reweighted subgraph H whose Laplacian quadratic form
sandwiches the input's:

    <L_G y, y>  <=  <L_H y, y>  <=  ((1+eps)/(1-eps))^2 * <L_G y, y>

for every y, with at most 2*ceil(n/eps^2) nonzero ordered entries in H.
``verify_quality`` certifies any candidate sparsifier independently via a
dense generalized eigensolver on the common range.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bss import sparsify_frame
from .errors import CertificationError
from .linalg import Frame, eigh, symmetrize


@dataclass
class WeightedGraph:
    """Vertices 0..n-1 with positive undirected edge weights.

    Edges are (i, j, w) with i < j and at most one entry per vertex pair.
    """

    n: int
    edges: list[tuple[int, int, float]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        seen = set()
        canon = []
        for i, j, w in self.edges:
            i, j = int(i), int(j)
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) must satisfy 0 <= i < j < {self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not w > 0:
                raise ValueError(f"edge ({i}, {j}) has nonpositive weight {w}")
            seen.add((i, j))
            canon.append((i, j, float(w)))
        self.edges = canon

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def ordered_support_size(self) -> int:
        return 2 * len(self.edges)

    def edge_pairs(self) -> set[tuple[int, int]]:
        return {(i, j) for i, j, _ in self.edges}

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return a


@dataclass
class QualityReport:
    """Certified quality of one graph's quadratic form against another's."""

    min_quotient: float
    max_quotient: float
    reference_support: int
    candidate_support: int
    range_dim: int

    @property
    def quality(self) -> float:
        return self.max_quotient / self.min_quotient


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Degree matrix minus adjacency; rows sum to zero."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def edge_frame(g: WeightedGraph) -> Frame:
    """One vector sqrt(w) * (e_i - e_j) per edge, in edge-list order.

    The sum of outer products of these vectors equals the Laplacian.
    Graphs with no edges have no frame; callers must check ``edge_count``.
    """
    if g.edge_count == 0:
        raise ValueError("graph has no edges, so its edge frame is empty")
    vectors = np.zeros((g.edge_count, g.n))
    for row, (i, j, w) in enumerate(g.edges):
        root = np.sqrt(w)
        vectors[row, i] = root
        vectors[row, j] = -root
    return Frame(vectors)


def sparsify_graph(g: WeightedGraph, eps: float, *, history: list | None = None) -> WeightedGraph:
    """Reweighted subgraph whose Laplacian form sandwiches the input's.

    The output H keeps a subset of g's edges (at most ceil(n/eps^2) of
    them), reweighted so the generalized Rayleigh quotients of (L_H, L_G)
    on the range of L_G lie in [1, ((1+eps)/(1-eps))^2].  Vertices with no
    surviving edge are kept; the Laplacian kernel is preserved.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if g.edge_count == 0:
        return WeightedGraph(g.n, [])
    frame = edge_frame(g)
    weights = sparsify_frame(frame, eps, history=history)
    # Lift the frame certificate's lower constant to exactly 1.
    lift = 1.0 / (1.0 - eps) ** 2
    edges = [
        (g.edges[idx][0], g.edges[idx][1], weights.weights[idx] * lift * g.edges[idx][2])
        for idx in weights.support
    ]
    return WeightedGraph(g.n, edges)


def verify_quality(g: WeightedGraph, h: WeightedGraph, *, kernel_tol: float = 1e-8) -> QualityReport:
    """Certify h's quadratic form against g's on the range of g's Laplacian.

    Checks the support and kernel preconditions (raising CertificationError
    with a witness edge or vector on violation), projects both Laplacians
    onto the orthogonal complement of g's kernel, and solves the dense
    symmetric-definite generalized eigenproblem there.
    """
    if g.n != h.n:
        raise ValueError(f"vertex counts differ: {g.n} vs {h.n}")
    extra = h.edge_pairs() - g.edge_pairs()
    if extra:
        witness = min(extra)
        raise CertificationError(
            f"candidate edge {witness} is not in the reference graph's support"
        )
    lap_g = laplacian(g)
    lap_h = laplacian(h)
    decomp = eigh(lap_g)
    scale = max(float(decomp.values[0]), 1.0)
    in_range = decomp.values > kernel_tol * scale
    kernel_vectors = decomp.vectors[:, ~in_range]
    if kernel_vectors.shape[1]:
        residuals = np.linalg.norm(lap_h @ kernel_vectors, axis=0)
        worst = int(np.argmax(residuals))
        if residuals[worst] > kernel_tol * max(1.0, float(np.abs(lap_h).max())):
            raise CertificationError(
                "kernel vector of the reference Laplacian is not annihilated by the "
                f"candidate (residual {residuals[worst]:.3e}); witness vector index {worst}"
            )
    r = int(np.count_nonzero(in_range))
    if r == 0:
        return QualityReport(1.0, 1.0, g.ordered_support_size, h.ordered_support_size, 0)
    basis = decomp.vectors[:, in_range]
    proj_g = symmetrize(basis.T @ lap_g @ basis)
    proj_h = symmetrize(basis.T @ lap_h @ basis)
    quotients = scipy.linalg.eigh(proj_h, proj_g, eigvals_only=True)
    return QualityReport(
        min_quotient=float(quotients[0]),
        max_quotient=float(quotients[-1]),
        reference_support=g.ordered_support_size,
        candidate_support=h.ordered_support_size,
        range_dim=r,
    )


def spectral_gap_ratio(h: WeightedGraph) -> float:
    """Absolute spectral spread over the top gap of the weighted adjacency.

    Returns (lambda_1 - lambda_n) / (lambda_1 - lambda_2).  Values near 1
    mean the graph behaves like a strong expander.  Degenerate spectra
    (lambda_1 close to lambda_2, e.g. disconnected or trivial graphs) are
    rejected.
    """
    if h.n < 2:
        raise ValueError("spectral gap ratio needs at least 2 vertices")
    lam = eigh(h.adjacency()).values
    gap = float(lam[0] - lam[1])
    if gap <= 1e-12:
        raise ValueError(
            f"top spectral gap {gap:.3e} is degenerate; the graph is disconnected or trivial"
        )
    return float((lam[0] - lam[-1]) / gap)


def ignore_self_loops(n: int, raw_edges) -> list[tuple[int, int, float]]:
    """Canonicalize raw (i, j, w) entries, dropping self-loops with a warning."""
    edges = []
    for i, j, w in raw_edges:
        i, j = int(i), int(j)
        if i == j:
            warnings.warn(f"ignoring self-loop at vertex {i}; it has no effect", stacklevel=2)
            continue
        edges.append((min(i, j), max(i, j), float(w)))
    return edges
