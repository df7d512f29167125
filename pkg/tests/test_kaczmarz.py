"""Tests for the row-action solvers and the Kaczmarz inner preconditioner."""

import numpy as np
import pytest
from pydantic import ValidationError

from core.errors import DegenerateRowError, InvalidParameterError
from core.generators import gen_random
from core.sparse import SparseMatrix, frobenius_sq, row_norms_sq, spmv
from inner.base import dense_inner_map
from inner.kaczmarz import (
    BlockSample,
    KaczmarzConfig,
    KaczmarzPreconditioner,
    cyclic_blocks,
    kaczmarz_step,
    rabk_solve,
    rabk_step_size,
    rk_solve,
    sample_block,
    sample_row,
    sample_rows,
)
from spectral.oracle import lambda_max_block_bound, min_nonzero_eig_gram
from tests.helpers import consistent_system


class TestKaczmarzStep:
    def test_projection_example(self):
        A = SparseMatrix.from_dense(np.array([[3.0, 4.0]]))
        x = kaczmarz_step(A, np.array([10.0]), np.zeros(2), 0, 1.0)
        np.testing.assert_allclose(x, [1.2, 1.6])
        assert 3.0 * x[0] + 4.0 * x[1] == pytest.approx(10.0)

    def test_zero_relaxation_keeps_iterate(self):
        A = SparseMatrix.from_dense(np.array([[3.0, 4.0]]))
        x = np.array([0.5, -1.0])
        np.testing.assert_array_equal(kaczmarz_step(A, np.array([10.0]), x, 0, 0.0), x)

    def test_degenerate_row(self):
        A = SparseMatrix.from_dense(np.array([[1.0, 0.0], [0.0, 0.0]]))
        with pytest.raises(DegenerateRowError, match="degenerate row 1"):
            kaczmarz_step(A, np.ones(2), np.zeros(2), 1, 1.0)

    def test_projection_exactness_on_seeded_rows(self):
        rng = np.random.default_rng(21)
        A, b, _ = consistent_system(rng, 15, 8)
        dense = A.to_dense()
        x = rng.standard_normal(8)
        for i in range(15):
            x_new = kaczmarz_step(A, b, x, i, 1.0)
            assert dense[i] @ x_new == pytest.approx(b[i], rel=1e-12, abs=1e-12)

    def test_step_identity_and_monotone_errors(self):
        """||x'-x*||^2 = ||x-x*||^2 - a(2-a) r_i^2/||a_i||^2 on 50 seeded systems."""
        rng = np.random.default_rng(2024)
        for trial in range(50):
            m, n = int(rng.integers(5, 41)), int(rng.integers(3, 21))
            A, b, x_star = consistent_system(rng, m, n)
            dense = A.to_dense()
            for alpha in (0.5, 1.0, 1.5):
                x = rng.standard_normal(n)
                i = int(rng.integers(m))
                x_new = kaczmarz_step(A, b, x, i, alpha)
                residual = dense[i] @ x - b[i]
                lhs = np.sum((x_new - x_star) ** 2)
                rhs = np.sum((x - x_star) ** 2) - alpha * (2 - alpha) * residual**2 / (dense[i] @ dense[i])
                assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

                config = KaczmarzConfig(
                    alpha=alpha, row_selection="randomized", seed=trial, max_steps=100, residual_factor=1e-14
                )
                _, history = rk_solve(A, b, config=config, x_star=x_star)
                errors = np.array(history.errors)
                assert np.all(np.diff(errors) <= 1e-12 * errors[0])


class TestSampling:
    def test_frequencies_follow_row_norms(self):
        rng = np.random.default_rng(0)
        draws = sample_rows(np.array([25.0, 75.0]), 100.0, rng, 100_000)
        assert abs(np.mean(draws == 1) - 0.75) <= 0.01

    def test_single_nonzero_row(self):
        rng = np.random.default_rng(1)
        norms = np.array([0.0, 4.0, 0.0])
        assert all(sample_row(norms, 4.0, rng) == 1 for _ in range(100))

    def test_all_zero_rows(self):
        with pytest.raises(DegenerateRowError):
            sample_row(np.zeros(3), 0.0, np.random.default_rng(0))

    def test_block_draws_distinct_nonzero_rows(self):
        rng = np.random.default_rng(3)
        norms = np.array([1.0, 0.0, 2.0, 3.0, 4.0])
        for _ in range(50):
            block = sample_block(norms, 3, rng)
            assert len(set(block.indices.tolist())) == 3
            assert 1 not in block.indices
            np.testing.assert_allclose(block.weights, 1.0 / 3.0)

    def test_cyclic_blocks_cover_rows(self):
        norms = np.array([1.0, 1.0, 0.0, 1.0, 1.0, 1.0])
        blocks = cyclic_blocks(norms, 2)
        assert [b.indices.tolist() for b in blocks] == [[0, 1], [3, 4], [5]]
        assert blocks[-1].weights.tolist() == [1.0]

    def test_block_weights_must_sum_to_one(self):
        with pytest.raises(InvalidParameterError):
            BlockSample.build([0, 1], [0.5, 0.6], np.ones(2))


class TestRkSolve:
    def test_scalar_system_one_step(self):
        A = SparseMatrix.from_dense(np.array([[2.0]]))
        x, history = rk_solve(A, np.array([4.0]))
        assert x[0] == pytest.approx(2.0)
        assert history.iterations == 1

    def test_rejects_adaptive_config(self):
        with pytest.raises(InvalidParameterError):
            rk_solve(SparseMatrix.identity(2), np.ones(2), config=KaczmarzConfig(step_mode="adaptive"))

    def test_alpha_outside_interval(self):
        with pytest.raises(ValidationError):
            KaczmarzConfig(alpha=2.0)

    def test_exact_one_step_expectation(self):
        rng = np.random.default_rng(77)
        A, b, x_star = consistent_system(rng, 20, 10)
        dense = A.to_dense()
        norms = row_norms_sq(A)
        total = frobenius_sq(A)
        x = rng.standard_normal(10)
        error_sq = np.sum((x - x_star) ** 2)
        residual_sq = np.sum((dense @ x - b) ** 2)
        lam = min_nonzero_eig_gram(A, "AAt")
        for alpha in (0.5, 1.0, 1.5):
            expected = sum(
                norms[i] / total * np.sum((kaczmarz_step(A, b, x, i, alpha) - x_star) ** 2) for i in range(20)
            )
            closed_form = error_sq - alpha * (2 - alpha) * residual_sq / total
            assert expected == pytest.approx(closed_form, rel=1e-12)
            assert expected <= (1 - alpha * (2 - alpha) * lam / total) * error_sq * (1 + 1e-12)

    def test_mean_contraction_over_trials(self):
        rng = np.random.default_rng(78)
        A, b, x_star = consistent_system(rng, 20, 10)
        alpha = 1.0
        factor = 1 - alpha * (2 - alpha) * min_nonzero_eig_gram(A, "AAt") / frobenius_sq(A)
        ratios = []
        for seed in range(200):
            config = KaczmarzConfig(alpha=alpha, row_selection="randomized", seed=seed, max_steps=1)
            _, history = rk_solve(A, b, config=config, x_star=x_star)
            ratios.append(history.errors[1] ** 2 / history.errors[0] ** 2)
        ratios = np.array(ratios)
        sigma_mean = ratios.std(ddof=1) / np.sqrt(ratios.size)
        assert ratios.mean() <= factor + 3 * sigma_mean

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(5)
        A, b, _ = consistent_system(rng, 25, 10)
        config = KaczmarzConfig(row_selection="randomized", seed=9, max_steps=300)
        x1, h1 = rk_solve(A, b, config=config)
        x2, h2 = rk_solve(A, b, config=config)
        np.testing.assert_array_equal(x1, x2)
        assert h1.residuals == h2.residuals

    def test_cyclic_converges_on_consistent_system(self):
        rng = np.random.default_rng(6)
        A, b, x_star = consistent_system(rng, 30, 10)
        x, history = rk_solve(A, b, config=KaczmarzConfig(max_steps=50_000))
        assert history.residuals[-1] <= 1e-6
        np.testing.assert_allclose(x, x_star, rtol=1e-4, atol=1e-4)


class TestRabkStepSize:
    def test_single_row_block(self):
        rng = np.random.default_rng(10)
        A, b, _ = consistent_system(rng, 6, 4)
        x = rng.standard_normal(4)
        block = BlockSample.build([2], [1.0], row_norms_sq(A))
        for delta in (0.25, 0.5, 1.0):
            alpha, L = rabk_step_size(A, x, b, block, delta)
            assert L == 1.0
            assert alpha == 2.0 - delta

    def test_zero_residual_uses_block_eigenvalue(self):
        A = SparseMatrix.identity(3)
        block = BlockSample.build([0, 1], [0.5, 0.5], row_norms_sq(A))
        alpha, L = rabk_step_size(A, np.zeros(3), np.zeros(3), block, 0.5)
        assert L == pytest.approx(2.0)
        assert alpha == pytest.approx(3.0)

    def test_jensen_lower_bound(self):
        rng = np.random.default_rng(11)
        A, _, _ = consistent_system(rng, 30, 10)
        norms = row_norms_sq(A)
        for _ in range(1000):
            tau = int(rng.integers(2, 7))
            indices = rng.choice(30, tau, replace=False)
            block = BlockSample.build(indices, rng.dirichlet(np.ones(tau)), norms)
            x, b = rng.standard_normal(10), rng.standard_normal(30)
            alpha, L = rabk_step_size(A, x, b, block, 1.0)
            assert L >= 1.0 - 1e-12
            assert alpha == pytest.approx(L)

    def test_delta_checked(self):
        block = BlockSample.build([0], [1.0], np.ones(2))
        with pytest.raises(InvalidParameterError):
            rabk_step_size(SparseMatrix.identity(2), np.zeros(2), np.ones(2), block, 0.0)


class TestRabkSolve:
    def test_fixed_point(self):
        rng = np.random.default_rng(12)
        A, b, x_star = consistent_system(rng, 20, 8)
        config = KaczmarzConfig(step_mode="adaptive", block_size=4, row_selection="randomized", seed=1)
        x, history = rabk_solve(A, b, x0=x_star, config=config)
        np.testing.assert_array_equal(x, x_star)
        assert history.iterations == 0

    def test_constant_step_mean_contraction(self):
        rng = np.random.default_rng(13)
        A, b, x_star = consistent_system(rng, 30, 10)
        tau, delta = 5, 1.0
        w = 1.0 / tau
        lam_w = min_nonzero_eig_gram(A, "AtA") / frobenius_sq(A)
        factor = 1 - (2 - delta) * w**2 * lam_w / (w**2 * lambda_max_block_bound(A, tau))
        ratios = []
        for seed in range(100):
            config = KaczmarzConfig(
                step_mode="constant", delta=delta, block_size=tau,
                row_selection="randomized", seed=seed, max_steps=1, residual_factor=1e-12,
            )
            _, history = rabk_solve(A, b, config=config, x_star=x_star)
            ratios.append(history.errors[1] ** 2 / history.errors[0] ** 2)
        ratios = np.array(ratios)
        sigma_mean = ratios.std(ddof=1) / np.sqrt(ratios.size)
        assert ratios.mean() <= factor + 3 * sigma_mean

    def test_adaptive_beats_single_row(self):
        rng = np.random.default_rng(14)
        A, b, _ = consistent_system(rng, 60, 20)
        wins = 0
        for seed in range(10):
            rk = KaczmarzConfig(alpha=1.0, row_selection="randomized", seed=seed, max_steps=50_000)
            block = KaczmarzConfig(
                step_mode="adaptive", delta=0.5, block_size=10,
                row_selection="randomized", seed=seed, max_steps=50_000,
            )
            _, rk_history = rk_solve(A, b, config=rk)
            _, block_history = rabk_solve(A, b, config=block)
            assert block_history.residuals[-1] <= 1e-6
            wins += block_history.iterations <= rk_history.iterations
        assert wins >= 8

    def test_cyclic_adaptive_converges(self):
        rng = np.random.default_rng(15)
        A, b, x_star = consistent_system(rng, 40, 12)
        config = KaczmarzConfig(step_mode="adaptive", block_size=4, max_steps=20_000)
        x, history = rabk_solve(A, b, config=config)
        assert history.residuals[-1] <= 1e-6
        np.testing.assert_allclose(spmv(A, x), b, atol=1e-5 * np.linalg.norm(b))


class TestKaczmarzPreconditioner:
    @pytest.mark.parametrize("block_size", [1, 4])
    def test_frozen_random_sequence_is_linear(self, block_size):
        A = gen_random(30, seed=1)
        inner = KaczmarzPreconditioner(
            A, KaczmarzConfig(row_selection="randomized", seed=3, block_size=block_size)
        )
        assert inner.linear
        rng = np.random.default_rng(4)
        u, v = rng.standard_normal(30), rng.standard_normal(30)
        combined = inner.apply(2.0 * u - 3.0 * v, 3)
        separate = 2.0 * inner.apply(u, 3) - 3.0 * inner.apply(v, 3)
        np.testing.assert_allclose(combined, separate, atol=1e-10 * np.linalg.norm(separate))

    def test_reset_replays_sequence(self):
        A = gen_random(20, seed=2)
        inner = KaczmarzPreconditioner(A, KaczmarzConfig(row_selection="randomized", seed=5))
        v = np.random.default_rng(0).standard_normal(20)
        first = inner.apply(v, 2)
        inner.reset()
        np.testing.assert_array_equal(inner.apply(v, 2), first)

    def test_single_pass_matches_cyclic_sweep(self):
        A = gen_random(10, seed=3)
        v = np.random.default_rng(1).standard_normal(10)
        z = np.zeros(10)
        for i in range(10):
            z = kaczmarz_step(A, v, z, i, 1.0)
        inner = KaczmarzPreconditioner(A)
        np.testing.assert_allclose(inner.apply(v, 1), z, rtol=1e-14, atol=1e-14)
        assert inner.last_depth == 1

    def test_adaptive_is_nonlinear_and_named(self):
        A = gen_random(12, seed=4)
        inner = KaczmarzPreconditioner(
            A, KaczmarzConfig(step_mode="adaptive", row_selection="randomized", block_size=3)
        )
        assert not inner.linear
        assert inner.name == "kaczmarz-adaptive-random"

    def test_single_row_adaptive_is_linear(self):
        A = gen_random(15, seed=6)
        inner = KaczmarzPreconditioner(A, KaczmarzConfig(step_mode="adaptive", delta=0.5))
        assert inner.linear
        assert inner.name == "kaczmarz-adaptive"
        rng = np.random.default_rng(7)
        u, v = rng.standard_normal(15), rng.standard_normal(15)
        combined = inner.apply(u - 2.0 * v, 2)
        separate = inner.apply(u, 2) - 2.0 * inner.apply(v, 2)
        np.testing.assert_allclose(combined, separate, atol=1e-10 * np.linalg.norm(separate))
        constant = KaczmarzPreconditioner(A, KaczmarzConfig(alpha=1.5))
        np.testing.assert_allclose(dense_inner_map(inner, 2), dense_inner_map(constant, 2), atol=1e-12)

    def test_apply_zero_is_zero(self):
        inner = KaczmarzPreconditioner(gen_random(8, seed=5), KaczmarzConfig(block_size=2))
        np.testing.assert_array_equal(inner.apply(np.zeros(8), 3), np.zeros(8))

    def test_block_size_checked(self):
        with pytest.raises(InvalidParameterError):
            KaczmarzPreconditioner(SparseMatrix.identity(3), KaczmarzConfig(block_size=4))
