import math

import numpy as np
import pytest

from rforge.bss import support_bound
from rforge.errors import CertificationError
from rforge.graphs import (
    WeightedGraph,
    edge_frame,
    ignore_self_loops,
    laplacian,
    sparsify_graph,
    spectral_gap_ratio,
    verify_quality,
)


def complete_graph(n, weight=1.0):
    return WeightedGraph(n, [(i, j, weight) for i in range(n) for j in range(i + 1, n)])


def random_graph(rng, n, density):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                edges.append((i, j, float(rng.uniform(0.5, 2.0))))
    if not edges:
        edges = [(0, 1, 1.0)]
    return WeightedGraph(n, edges)


class TestWeightedGraph:
    def test_validation(self):
        with pytest.raises(ValueError, match="duplicate"):
            WeightedGraph(3, [(0, 1, 1.0), (0, 1, 2.0)])
        with pytest.raises(ValueError, match="0 <= i < j"):
            WeightedGraph(3, [(1, 0, 1.0)])
        with pytest.raises(ValueError, match="nonpositive"):
            WeightedGraph(3, [(0, 1, 0.0)])

    def test_self_loop_helper_warns(self):
        with pytest.warns(UserWarning, match="self-loop"):
            edges = ignore_self_loops(3, [(0, 0, 1.0), (2, 1, 3.0)])
        assert edges == [(1, 2, 3.0)]


class TestLaplacian:
    def test_single_edge(self):
        g = WeightedGraph(2, [(0, 1, 1.0)])
        assert np.allclose(laplacian(g), [[1.0, -1.0], [-1.0, 1.0]])

    def test_triangle(self):
        lap = laplacian(complete_graph(3))
        assert np.allclose(np.diag(lap), [2.0, 2.0, 2.0])
        assert np.allclose(lap - np.diag(np.diag(lap)), -1 + np.eye(3))
        assert np.allclose(sorted(np.linalg.eigvalsh(lap)), [0.0, 3.0, 3.0], atol=1e-12)

    def test_empty_graph(self):
        assert np.array_equal(laplacian(WeightedGraph(3, [])), np.zeros((3, 3)))

    def test_quadratic_form_identity(self, rng):
        # <L y, y> equals half the double sum of w_ij (y_i - y_j)^2
        for _ in range(5):
            g = random_graph(rng, 7, 0.5)
            lap = laplacian(g)
            a = g.adjacency()
            for _ in range(100):
                y = rng.standard_normal(7)
                direct = 0.5 * sum(
                    a[i, j] * (y[i] - y[j]) ** 2 for i in range(7) for j in range(7)
                )
                assert y @ lap @ y == pytest.approx(direct, rel=1e-10, abs=1e-12)

    def test_row_sums_zero(self, rng):
        g = random_graph(rng, 9, 0.4)
        assert np.max(np.abs(laplacian(g).sum(axis=1))) <= 1e-10


class TestEdgeFrame:
    def test_scaling(self):
        g = WeightedGraph(2, [(0, 1, 4.0)])
        frame = edge_frame(g)
        assert np.allclose(frame.vectors, [[2.0, -2.0]])

    def test_outer_products_sum_to_laplacian(self, rng):
        g = random_graph(rng, 8, 0.6)
        frame = edge_frame(g)
        assert np.max(np.abs(frame.gram() - laplacian(g))) <= 1e-10

    def test_triangle_gram(self):
        frame = edge_frame(complete_graph(3))
        assert frame.size == 3
        assert np.max(np.abs(frame.gram() - laplacian(complete_graph(3)))) <= 1e-12

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError, match="no edges"):
            edge_frame(WeightedGraph(2, []))


class TestSparsifyGraph:
    def test_single_edge_identity_quality(self):
        g = WeightedGraph(2, [(0, 1, 3.0)])
        h = sparsify_graph(g, 0.5)
        assert h.edge_pairs() == {(0, 1)}
        report = verify_quality(g, h)
        assert report.min_quotient == pytest.approx(1.0, abs=1e-9)
        assert report.max_quotient == pytest.approx(1.0, abs=1e-9)

    def test_complete_graph_support_and_quality(self):
        eps = 0.6
        g = complete_graph(8)
        h = sparsify_graph(g, eps)
        assert h.ordered_support_size <= 2 * math.ceil(8 / eps**2)
        assert h.edge_pairs() <= g.edge_pairs()
        report = verify_quality(g, h)
        assert report.min_quotient >= 1.0 - 1e-8
        assert report.max_quotient <= ((1 + eps) / (1 - eps)) ** 2 + 1e-8

    def test_disconnected_components(self):
        # two triangles; kernel has dimension 2 and must be preserved
        edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)]
        g = WeightedGraph(6, edges)
        h = sparsify_graph(g, 0.7)
        lap_g = laplacian(g)
        lap_h = laplacian(h)
        lam_g = np.linalg.eigvalsh(lap_g)
        lam_h = np.linalg.eigvalsh(lap_h)
        assert np.sum(lam_g < 1e-9) == 2
        assert np.sum(lam_h < 1e-9 * max(1.0, lam_h[-1])) == 2
        report = verify_quality(g, h)
        assert report.range_dim == 4
        assert report.min_quotient >= 1.0 - 1e-8

    def test_empty_graph(self):
        h = sparsify_graph(WeightedGraph(4, []), 0.5)
        assert h.edge_count == 0

    def test_random_graphs_certified(self, rng):
        for density in (0.3, 1.0):
            g = random_graph(rng, 10, density)
            eps = 0.7
            h = sparsify_graph(g, eps)
            assert h.ordered_support_size <= 2 * support_bound(10, eps)
            report = verify_quality(g, h)
            assert report.min_quotient >= 1.0 - 1e-8
            assert report.max_quotient <= ((1 + eps) / (1 - eps)) ** 2 + 1e-8


class TestVerifyQuality:
    def test_identity_sparsifier(self):
        g = complete_graph(5)
        report = verify_quality(g, g)
        assert report.min_quotient == pytest.approx(1.0, abs=1e-10)
        assert report.max_quotient == pytest.approx(1.0, abs=1e-10)

    def test_doubled_weights(self):
        g = complete_graph(5)
        h = WeightedGraph(5, [(i, j, 2 * w) for i, j, w in g.edges])
        report = verify_quality(g, h)
        assert report.min_quotient == pytest.approx(2.0, rel=1e-10)
        assert report.max_quotient == pytest.approx(2.0, rel=1e-10)

    def test_support_violation_witness(self):
        g = WeightedGraph(3, [(0, 1, 1.0)])
        h = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 1.0)])
        with pytest.raises(CertificationError, match=r"\(1, 2\)"):
            verify_quality(g, h)

    def test_support_counts_reported(self):
        g = complete_graph(4)
        report = verify_quality(g, g)
        assert report.reference_support == 12
        assert report.candidate_support == 12


class TestSpectralGapRatio:
    def test_complete_graph_is_perfect(self):
        # adjacency spectrum of K_n: n-1 once, -1 repeated
        for n in (4, 8, 16):
            assert spectral_gap_ratio(complete_graph(n)) == pytest.approx(1.0, abs=1e-9)

    def test_sparsifier_of_complete_graph(self):
        g = complete_graph(16)
        h = sparsify_graph(g, 0.5)
        ratio = spectral_gap_ratio(h)
        assert ratio >= 1.0 - 1e-9
        # diagnostic only: finite and sane for an expander-like output
        assert np.isfinite(ratio)

    def test_degenerate_spectrum_rejected(self):
        # two isolated unit edges: lambda_1 == lambda_2
        g = WeightedGraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        with pytest.raises(ValueError, match="degenerate"):
            spectral_gap_ratio(g)

    def test_needs_two_vertices(self):
        with pytest.raises(ValueError, match="2 vertices"):
            spectral_gap_ratio(WeightedGraph(1, []))
