import math

import numpy as np
import pytest
import scipy.linalg

from rforge.bss import (
    barrier_gaps,
    candidate_scores,
    initial_barrier_state,
    select_and_step,
    sparsify_frame,
    support_bound,
)
from rforge.errors import BarrierInvariantError
from rforge.linalg import Frame, eigh, symmetrize

from oracles import barrier_step_oracle


def scalar_frame():
    return Frame(np.array([[1.0]]), isotropy_certified=True)


def random_isotropic_frame(rng, n, m):
    from rforge.linalg import isotropic_reduce

    vectors = rng.standard_normal((m, n))
    frame, _ = isotropic_reduce(Frame(vectors))
    assert frame.ambient_dim == n
    return frame


class TestBarrierGaps:
    def test_scalar_first_step(self):
        state = initial_barrier_state(1, 0.5)
        upper_gap, lower_gap = barrier_gaps(state)
        assert upper_gap == pytest.approx(1.0 / 18.0, abs=1e-12)
        assert lower_gap == pytest.approx(0.5, abs=1e-12)

    def test_gaps_positive_along_run(self, rng):
        frame = random_isotropic_frame(rng, 3, 7)
        state = initial_barrier_state(3, 0.6)
        for _ in range(support_bound(3, 0.6)):
            upper_gap, lower_gap = barrier_gaps(state)
            assert upper_gap > 0 and lower_gap > 0
            scores = candidate_scores(state, frame, upper_gap, lower_gap)
            state, _, _ = select_and_step(state, frame, *scores)


class TestCandidateScores:
    def test_scalar_values_match_oracle(self):
        state = initial_barrier_state(1, 0.5)
        upper_gap, lower_gap = barrier_gaps(state)
        upper_scores, lower_scores = candidate_scores(state, scalar_frame(), upper_gap, lower_gap)
        oracle = barrier_step_oracle(np.zeros((1, 1)), np.array([[1.0]]), 0.5, 1)
        assert upper_scores[0] == pytest.approx(oracle["upper_scores"][0], rel=1e-12)
        assert lower_scores[0] == pytest.approx(oracle["lower_scores"][0], rel=1e-12)
        # frozen from the scalar oracle
        assert upper_scores[0] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert lower_scores[0] == pytest.approx(1.0, abs=1e-12)

    def test_lower_sum_dominates_upper_sum(self, rng):
        for n, m, eps in [(2, 5, 0.5), (4, 9, 0.7), (3, 6, 0.9)]:
            frame = random_isotropic_frame(rng, n, m)
            state = initial_barrier_state(n, eps)
            for _ in range(support_bound(n, eps)):
                upper_gap, lower_gap = barrier_gaps(state)
                upper_scores, lower_scores = candidate_scores(state, frame, upper_gap, lower_gap)
                assert lower_scores.sum() >= upper_scores.sum() - 1e-9
                assert upper_scores.sum() <= 1 - eps + 1e-8
                assert lower_scores.sum() >= 1 - eps - 1e-8
                state, _, _ = select_and_step(state, frame, upper_scores, lower_scores)

    def test_requires_certified_frame(self):
        state = initial_barrier_state(2, 0.5)
        with pytest.raises(ValueError, match="certified"):
            candidate_scores(state, Frame(np.eye(2) * 2.0), 1.0, 1.0)


class TestSelectAndStep:
    def test_scalar_step(self):
        state = initial_barrier_state(1, 0.5)
        gaps = barrier_gaps(state)
        scores = candidate_scores(state, scalar_frame(), *gaps)
        new_state, chosen, weight = select_and_step(state, scalar_frame(), *scores)
        assert chosen == 0
        assert weight == pytest.approx(3.0, rel=1e-12)
        # spectrum strictly inside the advanced window (-1, 9)
        assert new_state.lower < new_state.eigenvalues[-1]
        assert new_state.eigenvalues[0] < new_state.upper

    def test_upper_potential_conserved_and_lower_monotone(self, rng):
        frame = random_isotropic_frame(rng, 4, 10)
        eps = 0.6
        state = initial_barrier_state(4, eps)
        target = eps / state.theta
        for _ in range(support_bound(4, eps)):
            before = state.lower_potential
            gaps = barrier_gaps(state)
            scores = candidate_scores(state, frame, *gaps)
            state, _, _ = select_and_step(state, frame, *scores)
            assert state.upper_potential == pytest.approx(target, rel=1e-8)
            assert state.lower_potential <= before + 1e-9
            assert state.lower_potential <= eps + 1e-8

    def test_infeasible_scores_raise(self):
        state = initial_barrier_state(1, 0.5)
        with pytest.raises(BarrierInvariantError, match="no feasible"):
            select_and_step(state, scalar_frame(), np.array([1.0]), np.array([0.5]))


class TestSparsifyFrame:
    def test_diagonal_case(self):
        frame = Frame(np.eye(2), isotropy_certified=True)
        weights = sparsify_frame(frame, 0.5)
        assert weights.support_size <= support_bound(2, 0.5)
        assert set(weights.support) <= {0, 1}
        total = symmetrize(
            (frame.vectors * weights.dense()[:, None]).T @ frame.vectors
        )
        lam = np.linalg.eigvalsh(total)
        assert lam[0] >= 0.25 - 1e-8 and lam[-1] <= 2.25 + 1e-8

    def test_unscaled_ratio_bound(self, rng):
        eps = 0.5
        frame = random_isotropic_frame(rng, 3, 12)
        history = []
        sparsify_frame(frame, eps, history=history)
        last = history[-1]
        ratio = last["spectrum_max"] / last["spectrum_min"]
        assert ratio <= ((1 + eps) / (1 - eps)) ** 2 + 1e-9

    def test_random_frame_against_dense_verifier(self, rng):
        eps = 0.6
        vectors = rng.standard_normal((60, 6))
        frame = Frame(vectors)
        weights = sparsify_frame(frame, eps)
        assert weights.support_size <= support_bound(6, eps)
        # independent verifier: eigendecompose the weighted sum directly
        dense = weights.dense()
        weighted = symmetrize((vectors * dense[:, None]).T @ vectors)
        plain = symmetrize(vectors.T @ vectors)
        lam_w = np.linalg.eigvalsh(weighted)
        lam_p = np.linalg.eigvalsh(plain)
        # both forms live on the same span here (full rank); compare Rayleigh bounds
        sandwich = scipy.linalg.eigh(weighted, plain, eigvals_only=True)
        assert sandwich[0] >= (1 - eps) ** 2 - 1e-7
        assert sandwich[-1] <= (1 + eps) ** 2 + 1e-7
        assert lam_w[0] > 0 and lam_p[0] > 0

    def test_support_bound_exact_count(self, rng):
        frame = random_isotropic_frame(rng, 2, 40)
        weights = sparsify_frame(frame, 0.9)
        assert weights.support_size <= math.ceil(2 / 0.81)

    def test_weights_accumulate_on_repeats(self):
        weights = sparsify_frame(scalar_frame(), 0.5)
        # all four iterations pick the single vector; weights fold together
        assert weights.support == [0]
        assert weights.weights[0] == pytest.approx(0.25, rel=1e-12)

    def test_eps_validation(self):
        with pytest.raises(ValueError):
            sparsify_frame(scalar_frame(), 1.5)
        with pytest.raises(ValueError):
            sparsify_frame(scalar_frame(), 0.0)

    def test_non_certified_frame_guarantee_on_span(self, rng):
        vectors = rng.standard_normal((10, 3))
        vectors[:, 2] = vectors[:, 0] + vectors[:, 1]  # rank 2
        eps = 0.7
        weights = sparsify_frame(Frame(vectors), eps)
        dense = weights.dense()
        weighted = symmetrize((vectors * dense[:, None]).T @ vectors)
        plain = symmetrize(vectors.T @ vectors)
        lam, vecs = np.linalg.eigh(plain)
        keep = lam > 1e-12 * lam[-1]
        v = vecs[:, keep]
        pencil = scipy.linalg.eigh(
            symmetrize(v.T @ weighted @ v), symmetrize(v.T @ plain @ v), eigvals_only=True
        )
        assert pencil[0] >= (1 - eps) ** 2 - 1e-7
        assert pencil[-1] <= (1 + eps) ** 2 + 1e-7


class TestPathAgreement:
    def test_sherman_morrison_path_matches_factorized(self, rng):
        for n, m, eps in [(2, 6, 0.8), (3, 5, 0.9), (4, 12, 0.6)]:
            frame = random_isotropic_frame(rng, n, m)
            hist_a, hist_b = [], []
            wa = sparsify_frame(frame, eps, method="factorize", history=hist_a)
            wb = sparsify_frame(frame, eps, method="sherman-morrison", history=hist_b)
            assert wa.support == wb.support
            for idx in wa.weights:
                assert wa.weights[idx] == pytest.approx(wb.weights[idx], rel=1e-9)
            for ra, rb in zip(hist_a, hist_b):
                assert ra["chosen"] == rb["chosen"]
                assert ra["upper_gap"] == pytest.approx(rb["upper_gap"], rel=1e-9)
                assert ra["lower_gap"] == pytest.approx(rb["lower_gap"], rel=1e-9)
                assert ra["lower_potential"] == pytest.approx(rb["lower_potential"], rel=1e-9)

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="method"):
            sparsify_frame(scalar_frame(), 0.5, method="mystery")


class TestOracleEquivalence:
    def test_single_step_matches_brute_force(self, rng):
        # small instances, large eps so runs stay short
        for n, m in [(1, 1), (2, 4), (3, 6), (2, 6), (3, 3)]:
            frame = random_isotropic_frame(rng, n, m) if n > 1 else scalar_frame()
            eps = 0.8
            state = initial_barrier_state(n, eps)
            for _ in range(support_bound(n, eps)):
                oracle = barrier_step_oracle(state.A, frame.vectors, eps, state.step + 1)
                upper_gap, lower_gap = barrier_gaps(state)
                assert upper_gap == pytest.approx(oracle["upper_gap"], rel=1e-9)
                assert lower_gap == pytest.approx(oracle["lower_gap"], rel=1e-9)
                upper_scores, lower_scores = candidate_scores(
                    state, frame, upper_gap, lower_gap
                )
                np.testing.assert_allclose(upper_scores, oracle["upper_scores"], rtol=1e-9)
                np.testing.assert_allclose(lower_scores, oracle["lower_scores"], rtol=1e-9)
                state, chosen, weight = select_and_step(
                    state, frame, upper_scores, lower_scores
                )
                assert chosen == oracle["chosen"]
                assert weight == pytest.approx(oracle["weight"], rel=1e-9)


class TestEigenWindow:
    def test_window_strict_at_every_step(self, rng):
        frame = random_isotropic_frame(rng, 3, 9)
        eps = 0.7
        state = initial_barrier_state(3, eps)
        for _ in range(support_bound(3, eps)):
            gaps = barrier_gaps(state)
            scores = candidate_scores(state, frame, *gaps)
            state, _, _ = select_and_step(state, frame, *scores)
            lam = eigh(state.A).values
            assert lam[-1] > -3 / eps + state.step
            assert lam[0] < state.theta * (3 / eps + state.step)
