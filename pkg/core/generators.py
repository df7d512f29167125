"""Synthetic test matrices used by the numerical examples and the test suite."""

from typing import Callable

import numpy as np
import scipy.sparse as sp

from core.errors import InvalidParameterError
from core.sparse import SparseMatrix

RANDOM_DENSITY = 0.1


def gen_tridiagonal(n: int) -> SparseMatrix:
    """
    Symmetric tridiagonal matrix with 10 on the diagonal and 2 beside it.

    Args:
        n: Matrix order (>= 1)

    Returns:
        The n x n matrix tridiag(2, 10, 2)
    """
    if n < 1:
        raise InvalidParameterError(f"tridiagonal order must be >= 1, got {n}")
    if n == 1:
        return SparseMatrix.from_dense(np.array([[10.0]]))
    matrix = sp.diags([np.full(n - 1, 2.0), np.full(n, 10.0), np.full(n - 1, 2.0)], [-1, 0, 1])
    return SparseMatrix.from_scipy(matrix)


def gen_random(n: int, seed: int = 0) -> SparseMatrix:
    """
    Deterministic random sparse matrix with a dominant diagonal.

    Off-diagonal entries are uniform(-1, 1) at density 0.1; each diagonal
    entry is max(row absolute sum, column absolute sum) + 1, so the matrix is
    strictly row diagonally dominant and its symmetric part is positive
    definite.

    Args:
        n: Matrix order (>= 1)
        seed: Seed for numpy's default generator

    Returns:
        The generated SparseMatrix
    """
    if n < 1:
        raise InvalidParameterError(f"random matrix order must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    off = sp.random(
        n, n, density=RANDOM_DENSITY, format="csr", random_state=rng,
        data_rvs=lambda size: rng.uniform(-1.0, 1.0, size),
    )
    off = off - sp.diags(off.diagonal())
    off.eliminate_zeros()
    magnitude = abs(off)
    row_sums = np.asarray(magnitude.sum(axis=1)).ravel()
    col_sums = np.asarray(magnitude.sum(axis=0)).ravel()
    diagonal = np.maximum(row_sums, col_sums) + 1.0
    return SparseMatrix.from_scipy(off + sp.diags(diagonal))


GENERATORS: dict[str, Callable[..., SparseMatrix]] = {
    "tridiag": lambda n, seed=0: gen_tridiagonal(n),
    "random": gen_random,
}
