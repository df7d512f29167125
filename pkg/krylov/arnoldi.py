"""Arnoldi process (modified Gram-Schmidt) and the Givens least-squares solve
of the Hessenberg problem min ||beta e_1 - H_bar y||."""

from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np
import scipy.linalg as la

from core.errors import HessenbergRankError, InvalidParameterError

logger = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-14
RANK_TOL = 1e-14


class ArnoldiState:
    """Orthonormal basis V and the columns of the upper-Hessenberg H_bar.

    After k extensions ``H_bar`` is (k+1) x k and ``op(V_k) = V_{k+1} H_bar``.
    On happy breakdown no new basis vector is added and ``breakdown`` is set.
    """

    def __init__(self, v0: np.ndarray):
        v0 = np.asarray(v0, dtype=np.float64)
        beta = float(np.linalg.norm(v0))
        if beta == 0.0:
            raise InvalidParameterError("Arnoldi needs a nonzero starting vector")
        self.beta = beta
        self.basis: list[np.ndarray] = [v0 / beta]
        self.columns: list[np.ndarray] = []
        self.breakdown = False
        self.dots = 0

    @property
    def k(self) -> int:
        return len(self.columns)

    @property
    def H_bar(self) -> np.ndarray:
        H = np.zeros((self.k + 1, self.k))
        for j, column in enumerate(self.columns):
            H[: j + 2, j] = column
        return H

    @property
    def V(self) -> np.ndarray:
        """Basis vectors as columns (k + 1 of them unless the process broke down)."""
        return np.column_stack(self.basis)


def arnoldi_extend(op: Callable[[np.ndarray], np.ndarray], state: ArnoldiState) -> ArnoldiState:
    """
    One Arnoldi step: w = op(v_k), orthogonalize by modified Gram-Schmidt,
    append column k of H_bar and (unless h_{k+1,k} <= 1e-14 beta) v_{k+1}.

    Args:
        op: The operator, as a callable on vectors
        state: Current state, extended in place

    Returns:
        The same state
    """
    if state.breakdown:
        raise InvalidParameterError("the Arnoldi process has already broken down")
    k = state.k
    w = np.array(op(state.basis[-1]), dtype=np.float64)
    h = np.zeros(k + 2)
    for i, v in enumerate(state.basis):
        h[i] = float(v @ w)
        w -= h[i] * v
    h[k + 1] = float(np.linalg.norm(w))
    state.dots += k + 2
    state.columns.append(h)

    if h[k + 1] <= BREAKDOWN_TOL * state.beta:
        logger.debug("happy breakdown at step %d (h = %.3e)", k + 1, h[k + 1])
        state.breakdown = True
    else:
        state.basis.append(w / h[k + 1])
    return state


class GivensLeastSquares:
    """Incremental QR of H_bar by Givens rotations.

    ``g`` is the rotated right-hand side beta e_1; after each column the
    least-squares residual is |g[k]|.
    """

    def __init__(self, beta: float):
        self.beta = float(beta)
        self.rotations: list[tuple[float, float]] = []
        self.R_columns: list[np.ndarray] = []
        self.g = [self.beta]

    @property
    def k(self) -> int:
        return len(self.R_columns)

    @property
    def residual(self) -> float:
        return abs(self.g[-1])

    def add_column(self, h: np.ndarray) -> float:
        """Rotate a new Hessenberg column (length k + 2) and return the residual."""
        k = self.k
        h = np.array(h, dtype=np.float64)
        if h.shape != (k + 2,):
            raise InvalidParameterError(f"column {k + 1} must have length {k + 2}, got {h.shape}")
        for i, (c, s) in enumerate(self.rotations):
            h[i], h[i + 1] = c * h[i] + s * h[i + 1], -s * h[i] + c * h[i + 1]

        r = float(np.hypot(h[k], h[k + 1]))
        c, s = (1.0, 0.0) if r == 0.0 else (h[k] / r, h[k + 1] / r)
        self.rotations.append((c, s))
        h[k], h[k + 1] = r, 0.0
        self.g.append(-s * self.g[k])
        self.g[k] = c * self.g[k]
        self.R_columns.append(h[: k + 1])
        return self.residual

    @property
    def rank_deficient(self) -> bool:
        """Whether the newest diagonal entry of R is numerically zero."""
        if not self.R_columns:
            return False
        diagonal = [abs(column[-1]) for column in self.R_columns]
        return diagonal[-1] <= RANK_TOL * max(max(diagonal), 1e-300)

    def solve(self, k: Optional[int] = None) -> np.ndarray:
        """y minimizing ||beta e_1 - H_bar y|| over the first ``k`` columns (all by default)."""
        k = self.k if k is None else k
        if not 0 <= k <= self.k:
            raise InvalidParameterError(f"cannot solve with {k} of {self.k} columns")
        R = np.zeros((k, k))
        for j, column in enumerate(self.R_columns[:k]):
            R[: j + 1, j] = column
        diagonal = np.abs(np.diag(R))
        if k and diagonal.min() <= RANK_TOL * max(diagonal.max(), 1e-300):
            raise HessenbergRankError(f"triangular factor is numerically rank deficient at k={k}")
        return la.solve_triangular(R, np.asarray(self.g[:k]))


def hessenberg_lsq(H_bar: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """
    Solve min ||beta e_1 - H_bar y|| with sequential Givens rotations.

    Args:
        H_bar: (k+1) x k upper-Hessenberg matrix
        beta: Norm of the starting vector

    Returns:
        ``(y, residual_estimate)``
    """
    H_bar = np.asarray(H_bar, dtype=np.float64)
    rows, k = H_bar.shape
    if rows != k + 1 or k < 1:
        raise InvalidParameterError(f"H_bar must be (k+1) x k with k >= 1, got {H_bar.shape}")
    lsq = GivensLeastSquares(beta)
    for j in range(k):
        lsq.add_column(H_bar[: j + 2, j])
    return lsq.solve(), lsq.residual
