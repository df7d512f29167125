"""Alternating-direction implicit iteration on the symmetric / skew-symmetric
splitting of the Jacobi-scaled matrix A_hat = H + S.

One sweep solves

    (H + alpha I) x_half = (alpha I - S) x + b_hat
    (S + alpha I) x_next = (alpha I - H) x_half + b_hat

with both shifted blocks factored once at setup.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Union

import numpy as np
import scipy.linalg as la

from core.errors import DimensionMismatchError, InvalidParameterError, SingularMatrixError
from core.history import ConvergenceHistory
from core.settings import DEFAULT_ADI_ALPHA, DEFAULT_MAXIT, DEFAULT_TOL
from core.sparse import SparseMatrix, as_vector, diagonal_precondition, to_dense
from inner.base import InnerPreconditioner

logger = logging.getLogger(__name__)

FactorKind = Literal["cholesky", "lu"]


@dataclass(frozen=True)
class AdiOperator:
    alpha: float
    H: np.ndarray
    S: np.ndarray
    factor_H: tuple[FactorKind, tuple]
    factor_S: tuple[FactorKind, tuple]
    b_hat: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.H.shape[0]

    def solve_H(self, rhs: np.ndarray) -> np.ndarray:
        return _factored_solve(self.factor_H, rhs)

    def solve_S(self, rhs: np.ndarray) -> np.ndarray:
        return _factored_solve(self.factor_S, rhs)


def _factored_solve(factor: tuple[FactorKind, tuple], rhs: np.ndarray) -> np.ndarray:
    kind, data = factor
    if kind == "cholesky":
        return la.cho_solve(data, rhs)
    return la.lu_solve(data, rhs)


def _lu(M: np.ndarray, what: str) -> tuple[FactorKind, tuple]:
    with np.errstate(divide="ignore", invalid="ignore"):
        lu, piv = la.lu_factor(M)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() <= 1e-14 * max(pivots.max(), 1.0):
        raise SingularMatrixError(f"shifted {what} block is singular")
    return "lu", (lu, piv)


def adi_setup(
    A_hat: Union[SparseMatrix, np.ndarray],
    alpha: float = DEFAULT_ADI_ALPHA,
    b_hat: Optional[np.ndarray] = None,
) -> AdiOperator:
    """
    Split A_hat and factor H + alpha I and S + alpha I.

    H + alpha I goes through Cholesky; when that fails (indefinite symmetric
    part) it falls back to LU with a warning.

    Args:
        A_hat: Square (usually Jacobi-scaled) matrix at desk scale
        alpha: Shift, any positive finite value
        b_hat: Right-hand side carried by the operator (optional)

    Raises:
        InvalidParameterError: alpha <= 0 or not finite
        SingularMatrixError: a shifted block is singular
    """
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise InvalidParameterError(f"ADI shift alpha must be positive and finite, got {alpha}")
    dense = to_dense(A_hat)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise DimensionMismatchError(f"ADI needs a square matrix, got {dense.shape}")
    n = dense.shape[0]
    if b_hat is not None:
        b_hat = as_vector(b_hat, n, "b_hat")

    H = 0.5 * (dense + dense.T)
    S = 0.5 * (dense - dense.T)
    shift = alpha * np.eye(n)

    try:
        factor_H: tuple[FactorKind, tuple] = ("cholesky", la.cho_factor(H + shift))
    except la.LinAlgError:
        logger.warning("H + %g I is not positive definite; falling back to LU", alpha)
        factor_H = _lu(H + shift, "symmetric")
    factor_S = _lu(S + shift, "skew-symmetric")
    return AdiOperator(alpha, H, S, factor_H, factor_S, b_hat)


def adi_sweep(op: AdiOperator, x: np.ndarray, b_hat: Optional[np.ndarray] = None) -> np.ndarray:
    """One double half-step; ``b_hat`` defaults to the operator's right-hand side."""
    rhs = op.b_hat if b_hat is None else b_hat
    if rhs is None:
        raise InvalidParameterError("adi_sweep needs a right-hand side")
    if x.shape != (op.n,) or rhs.shape != (op.n,):
        raise DimensionMismatchError(f"ADI vectors must have length {op.n}")
    half = op.solve_H(op.alpha * x - op.S @ x + rhs)
    return op.solve_S(op.alpha * half - op.H @ half + rhs)


def adi_iteration_matrix(
    A_hat: Union[SparseMatrix, np.ndarray],
    alpha: float = DEFAULT_ADI_ALPHA,
    b_hat: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Dense T_alpha and c with sweep(x) = T_alpha x + c.

    T_alpha = (S + aI)^-1 (aI - H) (H + aI)^-1 (aI - S) and
    c = (S + aI)^-1 [(aI - H)(H + aI)^-1 + I] b_hat (zero when b_hat is omitted).
    """
    op = adi_setup(A_hat, alpha, b_hat)
    n = op.n
    shift = alpha * np.eye(n)
    inner = (shift - op.H) @ _factored_solve(op.factor_H, np.eye(n))
    T_alpha = op.solve_S(inner @ (shift - op.S))
    c = np.zeros(n) if op.b_hat is None else op.solve_S(inner @ op.b_hat + op.b_hat)
    return T_alpha, c


def adi_solve(
    A: SparseMatrix,
    b: np.ndarray,
    alpha: float = DEFAULT_ADI_ALPHA,
    tol: float = DEFAULT_TOL,
    maxit: int = DEFAULT_MAXIT,
    x0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, ConvergenceHistory]:
    """
    Jacobi-scale A x = b, then sweep until ||b_hat - A_hat x|| <= tol ||b_hat||.

    Returns:
        ``(x, history)`` with relative scaled residuals, one per sweep
    """
    A_hat, b_hat, _ = diagonal_precondition(A, b)
    op = adi_setup(A_hat, alpha, b_hat)
    dense = to_dense(A_hat)
    x = np.zeros(A.n_cols) if x0 is None else as_vector(x0, A.n_cols, "x0").copy()

    scale = float(np.linalg.norm(b_hat)) or 1.0
    history = ConvergenceHistory()
    relative = float(np.linalg.norm(b_hat - dense @ x)) / scale
    history.record(relative, x)
    for _ in range(maxit):
        if relative <= tol:
            break
        x = adi_sweep(op, x)
        relative = float(np.linalg.norm(b_hat - dense @ x)) / scale
        history.record(relative, x)

    logger.info("adi_solve: %d sweeps (alpha=%g), relative residual %.3e", history.iterations, alpha, relative)
    return x, history


class AdiPreconditioner(InnerPreconditioner):
    """ADI sweeps on A_hat z = F^-1 v from z = 0 (one inner step = one sweep)."""

    name = "adi"
    linear = True

    def __init__(self, A: SparseMatrix, alpha: float = DEFAULT_ADI_ALPHA):
        super().__init__(A)
        A_hat, _, F = diagonal_precondition(A, np.zeros(A.n_rows))
        self.scaling = F
        self.op = adi_setup(A_hat, alpha)

    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        rhs = v / self.scaling
        z = np.zeros(self.n)
        while True:
            z = adi_sweep(self.op, z, rhs)
            yield z
