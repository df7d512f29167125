"""Seeded problem builders shared by the test modules."""

import numpy as np

from core.sparse import SparseMatrix


def consistent_system(rng: np.random.Generator, m: int, n: int):
    """Dense Gaussian m x n system with b = A x*; returns (A, b, x*)."""
    dense = rng.standard_normal((m, n))
    x_star = rng.standard_normal(n)
    return SparseMatrix.from_dense(dense), dense @ x_star, x_star


def spd_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    factor = rng.standard_normal((n, n))
    return factor @ factor.T / n + np.eye(n)


def positive_real_matrix(rng: np.random.Generator, n: int, skew: float = 1.0) -> np.ndarray:
    """Nonsymmetric matrix whose symmetric part is positive definite."""
    factor = rng.standard_normal((n, n))
    symmetric = factor @ factor.T / n + 0.5 * np.eye(n)
    K = rng.standard_normal((n, n))
    return symmetric + skew * 0.5 * (K - K.T)


def relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / scale
