"""Outer Krylov solvers: GMRES and BA-GMRES."""

from .arnoldi import ArnoldiState, GivensLeastSquares, arnoldi_extend, hessenberg_lsq
from .gmres import ba_gmres_solve, gmres_solve, operation_counts
from .report import OperationCounts, SolveConfig, SolveReport

__all__ = [
    "ArnoldiState",
    "GivensLeastSquares",
    "arnoldi_extend",
    "hessenberg_lsq",
    "ba_gmres_solve",
    "gmres_solve",
    "operation_counts",
    "OperationCounts",
    "SolveConfig",
    "SolveReport",
]
