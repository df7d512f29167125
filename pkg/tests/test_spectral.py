"""Tests for the dense spectral oracle."""

from itertools import combinations

import numpy as np
import pytest

from core.errors import InvalidParameterError, SingularMatrixError
from core.sparse import SparseMatrix
from spectral.oracle import (
    build_W,
    condition_2,
    dense_eigenvalues,
    is_semi_convergent,
    lambda_max_block,
    lambda_max_block_bound,
    min_nonzero_eig_gram,
    powers_converge,
    spectral_condition,
    spectral_radius,
    spectral_summary,
)


class TestEigenvalues:
    def test_diagonal(self):
        np.testing.assert_allclose(dense_eigenvalues(np.diag([3.0, 1.0, 2.0])), [1.0, 2.0, 3.0])

    def test_rotation(self):
        values = dense_eigenvalues(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        np.testing.assert_allclose(values.real, 0.0, atol=1e-14)
        np.testing.assert_allclose(np.sort(values.imag), [-1.0, 1.0], atol=1e-14)

    def test_companion_matrix(self):
        # x^2 - 3x + 2
        values = dense_eigenvalues(np.array([[0.0, -2.0], [1.0, 3.0]]))
        np.testing.assert_allclose(values, [1.0, 2.0], atol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_sum_equals_trace(self, seed):
        M = np.random.default_rng(seed).standard_normal((7, 7))
        values = dense_eigenvalues(M)
        assert values.sum().real == pytest.approx(np.trace(M), abs=1e-10)
        assert abs(values.sum().imag) <= 1e-10

    def test_sparse_input_and_radius(self):
        A = SparseMatrix.from_dense(np.diag([-4.0, 2.0]))
        assert spectral_radius(A) == pytest.approx(4.0)


class TestGramEigenvalues:
    def test_rank_deficient_diagonal(self):
        assert min_nonzero_eig_gram(np.diag([2.0, 0.0])) == pytest.approx(4.0)

    def test_orthonormal_rows(self):
        Q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((6, 3)))
        rows = Q.T
        assert min_nonzero_eig_gram(rows, "AAt") == pytest.approx(1.0)
        assert min_nonzero_eig_gram(rows, "AtA") == pytest.approx(1.0)

    def test_rank_deficient_matches_dense_eigenvalues(self):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 6))
        for side, gram in (("AtA", A.T @ A), ("AAt", A @ A.T)):
            values = np.linalg.eigvalsh(gram)
            expected = values[values > 1e-10 * values.max()].min()
            assert values[values > 1e-10 * values.max()].size == 3
            assert min_nonzero_eig_gram(A, side) == pytest.approx(expected, rel=1e-8)

    def test_zero_matrix(self):
        with pytest.raises(SingularMatrixError):
            min_nonzero_eig_gram(np.zeros((2, 2)))

    def test_bad_side(self):
        with pytest.raises(InvalidParameterError):
            min_nonzero_eig_gram(np.eye(2), "both")


class TestBlockEigenvalues:
    def test_single_unit_row(self):
        assert lambda_max_block(np.array([[0.6, 0.8]]), [0], [1.0]) == pytest.approx(1.0)

    def test_orthonormal_rows(self):
        assert lambda_max_block(np.eye(4), [0, 2, 3], [1.0, 1.0, 1.0]) == pytest.approx(1.0)

    def test_identical_unit_rows(self):
        rows = np.array([[0.6, 0.8], [0.6, 0.8]])
        assert lambda_max_block(rows, [0, 1], [1.0, 1.0]) == pytest.approx(2.0)

    def test_rank_two_blocks_stay_below_tau(self):
        rng = np.random.default_rng(12)
        A = rng.standard_normal((12, 6))
        unit = A / np.linalg.norm(A, axis=1)[:, None]
        for _ in range(50):
            tau = int(rng.integers(2, 6))
            J = rng.choice(12, tau, replace=False)
            assert lambda_max_block(unit, J, np.ones(tau)) < tau

    def test_bound_is_exact_maximum_when_enumerated(self):
        rng = np.random.default_rng(5)
        dense = rng.standard_normal((7, 4))
        A = SparseMatrix.from_dense(dense)
        norms = np.einsum("ij,ij->i", dense, dense)
        expected = max(
            lambda_max_block(dense, list(J), 1.0 / norms[list(J)]) for J in combinations(range(7), 3)
        )
        assert lambda_max_block_bound(A, 3) == pytest.approx(expected, rel=1e-12)

    def test_bound_when_too_many_blocks(self):
        rng = np.random.default_rng(6)
        A = SparseMatrix.from_dense(rng.standard_normal((30, 10)))
        bound = lambda_max_block_bound(A, 5)
        assert 1.0 <= bound <= 5.0

    def test_bound_block_size_checked(self):
        with pytest.raises(InvalidParameterError):
            lambda_max_block_bound(SparseMatrix.identity(3), 4)


class TestBuildW:
    def test_single_row_projector(self):
        W = build_W(np.array([[3.0, 4.0]]), [1.0])
        np.testing.assert_allclose(W, np.outer([3.0, 4.0], [3.0, 4.0]) / 25.0)
        assert np.trace(W) == pytest.approx(1.0)

    def test_orthonormal_rows_uniform(self):
        np.testing.assert_allclose(build_W(np.eye(4), np.full(4, 0.25)), np.eye(4) / 4)

    @pytest.mark.parametrize("seed", range(3))
    def test_seeded_matrix_is_positive_semidefinite(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((9, 5))
        A[2] = 0.0
        p = rng.uniform(0.1, 1.0, 9)
        p[2] = 0.0
        W = build_W(A, p / p.sum())
        np.testing.assert_array_equal(W, W.T)
        assert np.linalg.eigvalsh(W).min() >= -1e-12

    def test_probabilities_checked(self):
        with pytest.raises(InvalidParameterError):
            build_W(np.eye(2), [0.7, 0.7])


def _rotation(theta: float) -> np.ndarray:
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def _random_block(rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """A diagonal block with a known verdict on whether its powers converge."""
    kind = int(rng.integers(7))
    if kind == 0:
        return np.array([[rng.uniform(-0.9, 0.9)]]), True
    if kind == 1:
        return np.array([[rng.choice([-1.0, 1.0]) * rng.uniform(1.1, 2.0)]]), False
    if kind == 2:
        return np.array([[1.0]]), True
    if kind == 3:
        return rng.uniform(0.2, 0.9) * _rotation(rng.uniform(0.3, 2.8)), True
    if kind == 4:
        return _rotation(rng.uniform(0.3, 2.8)), False
    if kind == 5:
        return np.array([[-1.0]]), False
    return np.array([[1.0, 1.0], [0.0, 1.0]]), False


def _seeded_matrix(seed: int) -> tuple[np.ndarray, bool]:
    rng = np.random.default_rng(seed)
    blocks, expected, size = [], True, 0
    while size < 6:
        block, ok = _random_block(rng)
        blocks.append(block)
        expected = expected and ok
        size += block.shape[0]
    T = np.zeros((size, size))
    start = 0
    for block in blocks:
        k = block.shape[0]
        T[start:start + k, start:start + k] = block
        start += k
    Q, _ = np.linalg.qr(rng.standard_normal((size, size)))
    return Q @ T @ Q.T, expected


class TestSemiConvergence:
    @pytest.mark.parametrize(
        "H, expected",
        [
            (0.5 * np.eye(3), True),
            (np.eye(3), True),
            (np.array([[1.0, 1.0], [0.0, 1.0]]), False),
            (-np.eye(2), False),
        ],
    )
    def test_hand_cases(self, H, expected):
        assert is_semi_convergent(H) is expected
        assert powers_converge(H) is expected

    def test_seeded_matrices_agree_with_power_oracle(self):
        disagreements = []
        for seed in range(200):
            H, expected = _seeded_matrix(seed)
            spectral = is_semi_convergent(H)
            powers = powers_converge(H)
            if not (spectral == powers == expected):
                disagreements.append((seed, expected, spectral, powers))
        assert disagreements == []

    def test_semisimple_repeated_unit_eigenvalue(self):
        H = np.diag([1.0, 1.0, 0.3])
        assert is_semi_convergent(H)

    def test_unit_eigenvalue_with_rounding_offset(self):
        assert is_semi_convergent(np.diag([1.0, 1.0 - 1e-7])) is True


class TestConditionNumbers:
    def test_identity(self):
        assert condition_2(np.eye(4)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert condition_2(np.diag([10.0, 1.0])) == pytest.approx(10.0)

    def test_wide_spread_diagonal(self):
        assert condition_2(np.diag([1e8, 1.0])) == pytest.approx(1e8, rel=1e-10)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            condition_2(np.diag([1.0, 0.0]))

    def test_near_singular_by_singular_value_threshold(self):
        with pytest.raises(SingularMatrixError):
            condition_2(np.diag([1.0, 1e-17]))

    @pytest.mark.parametrize("seed", range(3))
    def test_transpose_has_same_condition(self, seed):
        M = np.random.default_rng(seed).standard_normal((6, 6))
        assert condition_2(M) == pytest.approx(condition_2(M.T), rel=1e-10)

    def test_spectral_condition_is_similarity_invariant(self):
        rng = np.random.default_rng(8)
        D = np.diag([1.0, 2.0, 8.0])
        V = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
        assert spectral_condition(V @ D @ np.linalg.inv(V)) == pytest.approx(8.0, rel=1e-8)

    def test_summary_of_spd_matrix(self):
        summary = spectral_summary(np.diag([4.0, 1.0]))
        assert summary.spectral_radius == pytest.approx(4.0)
        assert summary.min_nonzero_eig == pytest.approx(1.0)
        assert summary.condition_2 == pytest.approx(4.0)

    def test_summary_of_singular_matrix(self):
        summary = spectral_summary(np.diag([2.0, 0.0]))
        assert summary.condition_2 is None
        assert summary.min_nonzero_eig == pytest.approx(2.0)
