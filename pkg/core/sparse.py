"""Compressed-row sparse matrix and the vector primitives built on it."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from core.errors import DenseCapError, DimensionMismatchError, InvalidParameterError
from core.settings import DENSE_CAP

logger = logging.getLogger(__name__)

Operator = Union["SparseMatrix", np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable CSR matrix.

    Invariants checked at construction: ``row_offsets`` has ``n_rows + 1``
    non-decreasing entries ending at the stored-entry count, column indices
    lie in ``[0, n_cols)`` and strictly increase within each row, and every
    stored value is finite.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        offsets = np.array(self.row_offsets, dtype=np.int64)
        cols = np.array(self.col_indices, dtype=np.int64)
        vals = np.array(self.values, dtype=np.float64)

        if self.n_rows < 0 or self.n_cols < 0:
            raise InvalidParameterError("matrix dimensions must be non-negative")
        if offsets.shape != (self.n_rows + 1,):
            raise InvalidParameterError(
                f"row_offsets must have length n_rows+1={self.n_rows + 1}, got {offsets.size}"
            )
        if offsets[0] != 0 or np.any(np.diff(offsets) < 0):
            raise InvalidParameterError("row_offsets must start at 0 and be non-decreasing")
        nnz = int(offsets[-1])
        if cols.shape != (nnz,) or vals.shape != (nnz,):
            raise InvalidParameterError(
                f"row_offsets ends at {nnz} but {cols.size} column indices and {vals.size} values are stored"
            )
        if nnz and (cols.min() < 0 or cols.max() >= self.n_cols):
            raise InvalidParameterError(f"column index out of range [0, {self.n_cols})")
        if nnz > 1:
            increasing = np.diff(cols) > 0
            # Row boundaries are exempt from the ordering check
            boundary = offsets[1:-1]
            boundary = boundary[(boundary > 0) & (boundary < nnz)] - 1
            increasing[boundary] = True
            if not increasing.all():
                raise InvalidParameterError("column indices must strictly increase within each row")
        if not np.all(np.isfinite(vals)):
            raise InvalidParameterError("stored values must be finite")

        for name, arr in (("row_offsets", offsets), ("col_indices", cols), ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # -------------------------------------------------------------------------
    # Constructors
    # -------------------------------------------------------------------------

    @classmethod
    def from_scipy(cls, matrix: sp.spmatrix) -> "SparseMatrix":
        """Build from any scipy sparse matrix; duplicates are summed."""
        csr = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_dense(cls, array: np.ndarray) -> "SparseMatrix":
        """Build from a dense 2-D array, storing only nonzero entries."""
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2:
            raise DimensionMismatchError(f"expected a 2-D array, got shape {array.shape}")
        return cls.from_scipy(sp.csr_matrix(array))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls.from_scipy(sp.identity(n, format="csr"))

    # -------------------------------------------------------------------------
    # Views
    # -------------------------------------------------------------------------

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """scipy view sharing the stored arrays (read-only)."""
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets),
            shape=(self.n_rows, self.n_cols),
            copy=False,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row ``i``."""
        start, stop = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[start:stop], self.values[start:stop]

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.csr.T)

    def to_dense(self, cap: int | None = None) -> np.ndarray:
        return to_dense(self, cap)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


# =============================================================================
# Vector helpers
# =============================================================================

def as_vector(x, n: int, name: str = "vector") -> np.ndarray:
    """Validate a dense vector: 1-D, length ``n``, finite entries."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise DimensionMismatchError(f"{name} must have length {n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError(f"{name} contains non-finite entries")
    return x


def to_dense(A: Union[SparseMatrix, np.ndarray], cap: int | None = None) -> np.ndarray:
    """Dense copy of ``A``; refuses matrices larger than the dense cap."""
    cap = DENSE_CAP if cap is None else cap
    shape = A.shape
    if max(shape) > cap:
        raise DenseCapError(f"matrix of shape {shape} exceeds the dense cap {cap}")
    if isinstance(A, SparseMatrix):
        return A.csr.toarray()
    return np.array(A, dtype=np.float64)


def matvec_of(A: Operator) -> Callable[[np.ndarray], np.ndarray]:
    """Return ``x -> A @ x`` for a SparseMatrix, dense array or callable."""
    if isinstance(A, SparseMatrix):
        return lambda x: spmv(A, x)
    if isinstance(A, np.ndarray):
        return lambda x: A @ x
    if callable(A):
        return A
    raise InvalidParameterError(f"cannot use {type(A).__name__} as a linear operator")


# =============================================================================
# Primitives
# =============================================================================

def spmv(A: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """y = A x, accumulated left to right within each row."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n_cols,):
        raise DimensionMismatchError(f"spmv: x has shape {x.shape}, A has {A.n_cols} columns")
    return A.csr @ x


def spmv_transpose(A: SparseMatrix, y: np.ndarray) -> np.ndarray:
    """x = A^T y."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.n_rows,):
        raise DimensionMismatchError(f"spmv_transpose: y has shape {y.shape}, A has {A.n_rows} rows")
    return A.csr.T @ y


def row_norms_sq(A: SparseMatrix) -> np.ndarray:
    """Squared Euclidean norm of every row."""
    squares = A.values * A.values
    out = np.zeros(A.n_rows)
    counts = np.diff(A.row_offsets)
    nonempty = counts > 0
    if A.nnz:
        out[nonempty] = np.add.reduceat(squares, A.row_offsets[:-1][nonempty])
    return out


def frobenius_sq(A: SparseMatrix) -> float:
    return float(np.dot(A.values, A.values))


def symmetric_split(A: SparseMatrix, cap: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Split a square matrix into its symmetric part H and skew part S.

    Returns:
        ``(H, S)`` dense, with ``H = (A + A^T)/2``, ``S = (A - A^T)/2``.
    """
    if A.n_rows != A.n_cols:
        raise DimensionMismatchError(f"symmetric_split needs a square matrix, got {A.shape}")
    dense = to_dense(A, cap)
    H = 0.5 * (dense + dense.T)
    S = 0.5 * (dense - dense.T)
    return H, S


def diagonal_precondition(
    A: SparseMatrix, b: np.ndarray
) -> tuple[SparseMatrix, np.ndarray, np.ndarray]:
    """Jacobi row scaling with zero diagonal entries patched to 1.

    Args:
        A: Square coefficient matrix.
        b: Right-hand side.

    Returns:
        ``(A_hat, b_hat, F)`` with ``A_hat = diag(F)^-1 A`` and
        ``b_hat = diag(F)^-1 b``.
    """
    if A.n_rows != A.n_cols:
        raise DimensionMismatchError(f"diagonal_precondition needs a square matrix, got {A.shape}")
    b = as_vector(b, A.n_rows, "b")
    F = A.diagonal().copy()
    zero = F == 0.0
    if zero.any():
        logger.debug("patching %d zero diagonal entries to 1", int(zero.sum()))
        F[zero] = 1.0
    A_hat = SparseMatrix.from_scipy(sp.diags(1.0 / F) @ A.csr)
    return A_hat, b / F, F
