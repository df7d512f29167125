"""Sparse matrix core: storage, Matrix Market I/O and test-matrix generators."""

from .errors import (
    BreakdownError,
    DegenerateRowError,
    DenseCapError,
    DimensionMismatchError,
    EigenvalueConvergenceError,
    HessenbergRankError,
    InvalidParameterError,
    MatrixMarketError,
    NotPositiveDefiniteError,
    SingularMatrixError,
    SolverError,
)
from .generators import GENERATORS, gen_random, gen_tridiagonal
from .history import ConvergenceHistory
from .market import emit_matrix_market, parse_matrix_market, read_matrix_market
from .sparse import (
    SparseMatrix,
    as_vector,
    diagonal_precondition,
    frobenius_sq,
    matvec_of,
    row_norms_sq,
    spmv,
    spmv_transpose,
    symmetric_split,
    to_dense,
)

__all__ = [
    "BreakdownError",
    "DegenerateRowError",
    "DenseCapError",
    "DimensionMismatchError",
    "EigenvalueConvergenceError",
    "HessenbergRankError",
    "InvalidParameterError",
    "MatrixMarketError",
    "NotPositiveDefiniteError",
    "SingularMatrixError",
    "SolverError",
    "GENERATORS",
    "gen_random",
    "gen_tridiagonal",
    "ConvergenceHistory",
    "emit_matrix_market",
    "parse_matrix_market",
    "read_matrix_market",
    "SparseMatrix",
    "as_vector",
    "diagonal_precondition",
    "frobenius_sq",
    "matvec_of",
    "row_norms_sq",
    "spmv",
    "spmv_transpose",
    "symmetric_split",
    "to_dense",
]
