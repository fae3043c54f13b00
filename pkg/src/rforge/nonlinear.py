"""Power-p energy forms and probe-based sparsifier quality diagnostics.

For a weighted graph G and scalar vertex values x, the p-energy is the
double sum of w_ij |x_i - x_j|^p over ordered pairs.  A reweighted subgraph
H is a p-sparsifier of quality C when, after an optimal global rescaling,
its p-energy sandwiches G's within a factor C for every x.  The quality
cannot be computed exactly for general p, but evaluating the energy ratio
over a probe set yields a certified lower bound that is invariant under
rescaling H.

``cycle_counterexample`` builds the weighted cycle whose lone light edge
makes it a (1+eps)-quality p-sparsifier pair while its quality at any
exponent q > p grows like eps * (n-1)^(q-p); it separates the exponents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CertificationError
from .graphs import WeightedGraph

DEFAULT_PROBE_SEED = 0x5EED
DEFAULT_PROBE_COUNT = 500


@dataclass
class ProbeSet:
    """Vertex-value configurations with nonzero reference energy.

    Build through :meth:`filtered`, which drops configurations whose energy
    vanishes on the graph under test (they would make the quality ratio
    undefined).
    """

    probes: list[np.ndarray]

    def __post_init__(self):
        if not self.probes:
            raise ValueError("probe set is empty")
        self.probes = [np.asarray(x, dtype=float) for x in self.probes]

    @classmethod
    def filtered(cls, candidates, g: WeightedGraph, p: float) -> "ProbeSet":
        kept = [x for x in candidates if p_energy(g, x, p) > 0.0]
        if not kept:
            raise ValueError("every candidate probe has zero energy on the reference graph")
        return cls(kept)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, g: WeightedGraph, p: float) -> "ProbeSet":
        """Each row of a dense matrix is one vertex-value configuration."""
        rows = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls.filtered(list(rows), g, p)

    def __len__(self) -> int:
        return len(self.probes)


def standard_probes(n: int, *, count: int = DEFAULT_PROBE_COUNT, seed: int = DEFAULT_PROBE_SEED):
    """Reproducible standard-normal probe configurations."""
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(n) for _ in range(count)]


def p_energy(g: WeightedGraph, x: np.ndarray, p: float) -> float:
    """Sum of w_ij |x_i - x_j|^p over ordered vertex pairs.

    Each undirected edge contributes twice, once per orientation.
    """
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p}")
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"probe must assign one value per vertex, got shape {x.shape}")
    total = 0.0
    for i, j, w in g.edges:
        total += 2.0 * w * abs(x[i] - x[j]) ** p
    return total


def energy_ratio_range(
    g: WeightedGraph, h: WeightedGraph, p: float, probes: ProbeSet
) -> tuple[float, float]:
    """Extreme values of R(x) = E_h(x)/E_g(x) over the probe set.

    The smallest ratio is the optimal global scaling exhibiting the quality
    bound; the spread max/min is the quality lower bound itself.
    """
    extra = h.edge_pairs() - g.edge_pairs()
    if extra:
        raise ValueError(f"candidate edge {min(extra)} missing from the reference support")
    ratios = np.array([p_energy(h, x, p) / p_energy(g, x, p) for x in probes.probes])
    return float(ratios.min()), float(ratios.max())


def quality_lower_bound(g: WeightedGraph, h: WeightedGraph, p: float, probes: ProbeSet) -> float:
    """Certified lower bound on h's quality as a p-sparsifier of g.

    Evaluates the energy ratio R(x) = E_h(x)/E_g(x) over the probes and
    returns max R / min R.  The optimal global scaling cancels in this
    ratio of ratios, so the bound is invariant under h -> lambda * h; the
    true quality quantifies over all configurations and can only be larger.
    """
    low, high = energy_ratio_range(g, h, p, probes)
    if low <= 0.0:
        return float("inf")
    return high / low


def cycle_counterexample(n: int, p: float, eps: float) -> tuple[WeightedGraph, WeightedGraph, ProbeSet]:
    """Weighted n-cycle pair separating p-quality from q-quality, q > p.

    One cycle edge has weight 1; the remaining path edges carry weight
    (n-1)^(p-1)/eps.  Dropping the light edge yields a p-sparsifier of
    quality at most 1+eps, yet evaluating at the returned witnesses (the
    ramp x_i = i and the single-vertex indicator) shows quality at least
    eps * (n-1)^(q-p) at any exponent q > p.
    """
    if n < 3:
        raise ValueError(f"cycle needs at least 3 vertices, got {n}")
    if not p > 0 or not eps > 0:
        raise ValueError("exponent and eps must be positive")
    heavy = (n - 1) ** (p - 1) / eps
    path = [(i, i + 1, heavy) for i in range(n - 1)]
    g = WeightedGraph(n, path + [(0, n - 1, 1.0)])
    h = WeightedGraph(n, path)
    ramp = np.arange(n, dtype=float)
    indicator = np.zeros(n)
    indicator[1] = 1.0
    witnesses = ProbeSet.filtered([ramp, indicator], g, p)
    return g, h, witnesses


def monotonicity_check(
    g: WeightedGraph,
    h: WeightedGraph,
    p: float,
    q: float,
    probes: ProbeSet,
    quality: float,
) -> dict:
    """Check that a certified p-sparsifier also behaves at exponents q <= p.

    ``quality`` must be a certified upper bound on h's p-quality (from a
    spectral certificate at p = 2, or by construction).  The probe lower
    bound at exponent q must then stay below it; a violation raises
    CertificationError, since it would contradict the monotone transfer of
    sparsifier quality to smaller exponents.
    """
    if q > p:
        raise ValueError(f"monotone transfer needs q <= p, got q={q} > p={p}")
    bound = quality_lower_bound(g, h, q, probes)
    if bound > quality + 1e-8:
        raise CertificationError(
            f"quality lower bound {bound:.12g} at exponent {q} exceeds the certified "
            f"p-quality {quality:.12g}"
        )
    return {
        "p": p,
        "q": q,
        "certified_p_quality": quality,
        "q_quality_lower_bound": bound,
        "margin": quality - bound,
    }
