"""Deterministic spectral sparsification toolkit.

Core surface:

- :mod:`rforge.linalg` -- dense symmetric kernels (eigendecomposition,
  resolvent solves, rank-one inverse updates, frame whitening).
- :mod:`rforge.bss` -- barrier-potential frame sparsification.
- :mod:`rforge.graphs` -- weighted graphs, Laplacians, graph sparsification
  and its spectral certificate.
- :mod:`rforge.restricted` -- well-conditioned column subset selection.
- :mod:`rforge.embed` -- approximate John decompositions, L1 point-set
  embeddings, even-exponent subspace embeddings.
- :mod:`rforge.nonlinear` -- power-p energy quality probes and the weighted
  cycle that separates exponents.
- :mod:`rforge.cli` -- batch command-line interface and file formats.
"""

from .bss import (
    BarrierState,
    SparseWeights,
    barrier_gaps,
    candidate_scores,
    initial_barrier_state,
    select_and_step,
    sparsify_frame,
    support_bound,
)
from .embed import (
    CutDecomposition,
    EmbeddedPoints,
    JohnDecomposition,
    approximate_john,
    barrier_eps_for_ratio,
    cut_decompose,
    embed_l1,
    embed_lp_even,
)
from .errors import (
    BarrierInvariantError,
    CertificationError,
    EigenConvergenceError,
    NotPositiveDefiniteError,
    RforgeError,
    SelectionInvariantError,
    SingularUpdateError,
    ZeroFrameError,
)
from .graphs import (
    QualityReport,
    WeightedGraph,
    edge_frame,
    laplacian,
    sparsify_graph,
    spectral_gap_ratio,
    verify_quality,
)
from .linalg import (
    EigenDecomposition,
    Frame,
    ReductionMap,
    eigh,
    isotropic_reduce,
    resolvent_apply,
    sherman_morrison_inverse_update,
    symmetrize,
    trace_after_rank_one,
)
from .nonlinear import (
    ProbeSet,
    cycle_counterexample,
    monotonicity_check,
    p_energy,
    quality_lower_bound,
    standard_probes,
)
from .restricted import RiState, ri_barrier, ri_candidate_test, ri_select, selection_size

__version__ = "0.1.0"

__all__ = [
    "BarrierInvariantError",
    "BarrierState",
    "CertificationError",
    "CutDecomposition",
    "EigenConvergenceError",
    "EigenDecomposition",
    "EmbeddedPoints",
    "Frame",
    "JohnDecomposition",
    "NotPositiveDefiniteError",
    "ProbeSet",
    "QualityReport",
    "ReductionMap",
    "RforgeError",
    "RiState",
    "SelectionInvariantError",
    "SingularUpdateError",
    "SparseWeights",
    "WeightedGraph",
    "ZeroFrameError",
    "approximate_john",
    "barrier_eps_for_ratio",
    "barrier_gaps",
    "candidate_scores",
    "cut_decompose",
    "cycle_counterexample",
    "edge_frame",
    "eigh",
    "embed_l1",
    "embed_lp_even",
    "initial_barrier_state",
    "isotropic_reduce",
    "laplacian",
    "monotonicity_check",
    "p_energy",
    "quality_lower_bound",
    "resolvent_apply",
    "ri_barrier",
    "ri_candidate_test",
    "ri_select",
    "select_and_step",
    "selection_size",
    "sherman_morrison_inverse_update",
    "sparsify_frame",
    "sparsify_graph",
    "spectral_gap_ratio",
    "standard_probes",
    "support_bound",
    "symmetrize",
    "trace_after_rank_one",
    "verify_quality",
]
