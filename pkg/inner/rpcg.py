"""Block-partition factors and the restricted preconditioned conjugate gradient.

A square matrix is split as A = [[T, B], [C, D]] with an SPD leading block T.
With the Schur complement S = D - C T^-1 B,

    A = P blkdiag(T, S) Q,   P = [[I, 0], [C T^-1, I]],   Q = [[I, T^-1 B], [0, I]].

The preconditioner is M = P G Q with G = L^T L, L = blkdiag(E, F), T = E^T E
and F the Cholesky factor of an SPD approximation S_hat of S. RPCG is CG on
R = (P L^T)^-1 A (L Q)^-1 written in the original variables; it uses the
left map z = M^-1 r and the companion map v = W^-1 z with W = Q^-1 P^T.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Literal, Optional

import numpy as np
import scipy.linalg as la
from scipy.linalg import lapack

from core.errors import (
    BreakdownError,
    DimensionMismatchError,
    InvalidParameterError,
    NotPositiveDefiniteError,
)
from core.history import ConvergenceHistory
from core.settings import DEFAULT_MAXIT, DEFAULT_TOL
from core.sparse import Operator, SparseMatrix, matvec_of, to_dense
from inner.base import InnerPreconditioner

logger = logging.getLogger(__name__)

SchurMode = Literal["upper", "diagonal"]

SHIFT_RETRIES = 4


@dataclass(frozen=True)
class BlockPartition:
    split: int
    T: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def n(self) -> int:
        return self.split + self.D.shape[0]

    def reassemble(self) -> np.ndarray:
        return np.block([[self.T, self.B], [self.C, self.D]])


@dataclass(frozen=True)
class RpcgFactors:
    """Dense factors of the block preconditioner, immutable after build.

    ``Y = T^-1 B`` and ``X = C T^-1`` are stored so that M^-1 and W^-1 are
    applied with block substitutions and two Cholesky solves.
    ``F_chol^T F_chol = S_hat + shift I``.
    """

    split: int
    P: np.ndarray
    Q: np.ndarray
    S_schur: np.ndarray
    S_hat: np.ndarray
    E: np.ndarray
    F_chol: np.ndarray
    G: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    shift: float = 0.0
    schur_mode: SchurMode = "upper"

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def m_solve(self, v: np.ndarray) -> np.ndarray:
        """(P G Q)^-1 v."""
        k = self.split
        v1, v2 = v[:k], v[k:]
        u2 = v2 - self.X @ v1
        w1 = la.cho_solve((self.E, False), v1)
        w2 = la.cho_solve((self.F_chol, False), u2)
        return np.concatenate([w1 - self.Y @ w2, w2])

    def w_solve(self, z: np.ndarray) -> np.ndarray:
        """(Q^-1 P^T)^-1 z = P^-T Q z."""
        k = self.split
        z1, z2 = z[:k], z[k:]
        t1 = z1 + self.Y @ z2
        return np.concatenate([t1 - self.X.T @ z2, z2])

    def cholesky_block(self) -> np.ndarray:
        """L = blkdiag(E, F_chol), so that G = L^T L."""
        return la.block_diag(self.E, self.F_chol)

    def transformed_matrix(self, A) -> np.ndarray:
        """Dense R = (P L^T)^-1 A (L Q)^-1."""
        dense = to_dense(A)
        L = self.cholesky_block()
        left = la.solve(self.P @ L.T, dense)
        return la.solve((L @ self.Q).T, left.T).T


# =============================================================================
# Factor construction
# =============================================================================

def build_partition(A, split: Optional[int] = None) -> BlockPartition:
    """
    Cut a square matrix into the 2 x 2 block form.

    Args:
        A: Square matrix (SparseMatrix or dense) at desk scale
        split: Order of the leading block, 0 < split < n (default n // 2)

    Returns:
        The four blocks
    """
    dense = to_dense(A)
    n = dense.shape[0]
    if dense.ndim != 2 or dense.shape[1] != n:
        raise DimensionMismatchError(f"block partition needs a square matrix, got {dense.shape}")
    split = n // 2 if split is None else split
    if not 0 < split < n:
        raise InvalidParameterError(f"split index must satisfy 0 < split < {n}, got {split}")
    return BlockPartition(
        split,
        dense[:split, :split].copy(),
        dense[:split, split:].copy(),
        dense[split:, :split].copy(),
        dense[split:, split:].copy(),
    )


def dense_cholesky(M: np.ndarray) -> np.ndarray:
    """
    Upper-triangular U with U^T U = M.

    Raises:
        NotPositiveDefiniteError: a leading minor is not positive; ``pivot``
            is its 1-based order
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"Cholesky needs a square matrix, got {M.shape}")
    scale = max(float(np.abs(M).max(initial=0.0)), 1.0)
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * scale):
        raise InvalidParameterError("Cholesky needs a symmetric matrix")
    if M.size == 0:
        return M.copy()
    U, info = lapack.dpotrf(M, lower=0, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(f"not positive definite: pivot {info} is not positive", pivot=int(info))
    if info < 0:
        raise InvalidParameterError(f"dpotrf rejected argument {-info}")
    return np.triu(U)


def schur_complement(p: BlockPartition) -> np.ndarray:
    """S = D - C T^-1 B via Cholesky solves with T."""
    E = dense_cholesky(p.T)
    return p.D - p.C @ la.cho_solve((E, False), p.B)


def symmetrize_upper(S: np.ndarray) -> np.ndarray:
    """Mirror the upper triangle of S onto the lower one."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {S.shape}")
    return np.triu(S) + np.triu(S, 1).T


def _shifted_cholesky(S_hat: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return dense_cholesky(S_hat), 0.0
    except NotPositiveDefiniteError as exc:
        failure = exc
    gamma = 1e-8 * (float(np.linalg.norm(S_hat)) or 1.0)
    identity = np.eye(S_hat.shape[0])
    for _ in range(SHIFT_RETRIES):
        logger.warning(
            "Schur block not positive definite (pivot %d); retrying with shift %.3e",
            failure.pivot, gamma,
        )
        try:
            return dense_cholesky(S_hat + gamma * identity), gamma
        except NotPositiveDefiniteError as exc:
            failure = exc
            gamma *= 2.0
    raise NotPositiveDefiniteError(
        f"symmetrized Schur complement is not positive definite (pivot {failure.pivot}) "
        "even after diagonal shifts; try schur_mode='diagonal' or another split",
        pivot=failure.pivot,
    )


def build_factors(p: BlockPartition, schur_mode: SchurMode = "upper") -> RpcgFactors:
    """
    Assemble P, Q, G and the Cholesky factors for a partition.

    Args:
        p: Block partition with SPD leading block
        schur_mode: ``"upper"`` symmetrizes the upper triangle of S,
            ``"diagonal"`` keeps diag(S) only

    Returns:
        RpcgFactors

    Raises:
        NotPositiveDefiniteError: T is not SPD, or S_hat stays indefinite
    """
    try:
        E = dense_cholesky(p.T)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(f"leading block T is {exc}", pivot=exc.pivot) from exc
    Y = la.cho_solve((E, False), p.B)
    X = la.cho_solve((E, False), p.C.T).T
    S = p.D - p.C @ Y

    if schur_mode == "upper":
        S_hat = symmetrize_upper(S)
    elif schur_mode == "diagonal":
        S_hat = np.diag(np.diag(S))
    else:
        raise InvalidParameterError(f"schur_mode must be 'upper' or 'diagonal', got {schur_mode!r}")
    F_chol, shift = _shifted_cholesky(S_hat)

    k, m = p.split, p.D.shape[0]
    P = np.block([[np.eye(k), np.zeros((k, m))], [X, np.eye(m)]])
    Q = np.block([[np.eye(k), Y], [np.zeros((m, k)), np.eye(m)]])
    G = la.block_diag(E.T @ E, F_chol.T @ F_chol)
    logger.debug("rpcg factors built: split %d, schur_mode %s, shift %.3e", k, schur_mode, shift)
    return RpcgFactors(k, P, Q, S, S_hat, E, F_chol, G, X, Y, shift, schur_mode)


# =============================================================================
# Conjugate gradient recurrences
# =============================================================================

def pcg_iterations(
    A: Operator,
    b: np.ndarray,
    M_apply: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    x0: Optional[np.ndarray] = None,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(x_k, r_k)`` after every preconditioned CG iteration.

    Stops by itself once r^T M^-1 r vanishes.
    """
    matvec = matvec_of(A)
    precondition = M_apply or (lambda r: r)
    x = np.zeros_like(b, dtype=np.float64) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - matvec(x)
    z = precondition(r)
    p = z.copy()
    rz = float(r @ z)
    while rz != 0.0:
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise BreakdownError("matrix not SPD along Krylov direction")
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        yield x, r
        z = precondition(r)
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next


def rpcg_iterations(
    A: Operator,
    factors: RpcgFactors,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(x_k, r_k)`` after every RPCG iteration.

    alpha = v^T r / q^T A p, beta = v_next^T r_next / v^T r,
    p <- z + beta p, q <- v + beta q.
    """
    matvec = matvec_of(A)
    x = np.zeros(factors.n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - matvec(x)
    z = factors.m_solve(r)
    v = factors.w_solve(z)
    p, q = z.copy(), v.copy()
    vr = float(v @ r)
    while vr != 0.0:
        Ap = matvec(p)
        qAp = float(q @ Ap)
        if qAp == 0.0:
            raise BreakdownError("RPCG breakdown: q^T A p = 0")
        alpha = vr / qAp
        x = x + alpha * p
        r = r - alpha * Ap
        yield x, r
        z = factors.m_solve(r)
        v = factors.w_solve(z)
        vr_next = float(v @ r)
        beta = vr_next / vr
        p = z + beta * p
        q = v + beta * q
        vr = vr_next


def _run(iterations, A: Operator, b: np.ndarray, x0, tol: float, maxit: int, label: str):
    if tol <= 0.0 or maxit < 1:
        raise InvalidParameterError(f"need tol > 0 and maxit >= 1, got tol={tol}, maxit={maxit}")
    scale = float(np.linalg.norm(b)) or 1.0
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    history = ConvergenceHistory()
    history.record(float(np.linalg.norm(b - matvec_of(A)(x))) / scale, x)
    if history.residuals[0] <= tol:
        return x, history
    for k, (x, r) in enumerate(iterations, start=1):
        relative = float(np.linalg.norm(r)) / scale
        history.record(relative, x)
        if relative <= tol or k >= maxit:
            break
    logger.info("%s: %d iterations, relative residual %.3e", label, history.iterations, history.residuals[-1])
    return x, history


def pcg_solve(
    A: Operator,
    M_apply: Optional[Callable[[np.ndarray], np.ndarray]],
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    maxit: int = DEFAULT_MAXIT,
) -> tuple[np.ndarray, ConvergenceHistory]:
    """
    Preconditioned conjugate gradient (``M_apply=None`` gives plain CG).

    Returns when ||r_k|| <= tol ||b|| or after ``maxit`` iterations.

    Raises:
        BreakdownError: p^T A p <= 0
    """
    b = np.asarray(b, dtype=np.float64)
    return _run(pcg_iterations(A, b, M_apply, x0), A, b, x0, tol, maxit, "pcg_solve")


def rpcg_solve(
    A: Operator,
    factors: RpcgFactors,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    maxit: int = DEFAULT_MAXIT,
) -> tuple[np.ndarray, ConvergenceHistory]:
    """RPCG with the block factors; same stopping rule as :func:`pcg_solve`."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (factors.n,):
        raise DimensionMismatchError(f"b must have length {factors.n}, got shape {b.shape}")
    return _run(rpcg_iterations(A, factors, b, x0), A, b, x0, tol, maxit, "rpcg_solve")


# =============================================================================
# Inner preconditioners
# =============================================================================

class PcgPreconditioner(InnerPreconditioner):
    """l inner steps = l Jacobi-preconditioned CG iterations from z = 0."""

    name = "pcg"
    linear = False

    def __init__(self, A: SparseMatrix):
        super().__init__(A)
        diagonal = A.diagonal().copy()
        diagonal[diagonal == 0.0] = 1.0
        self.diagonal = diagonal

    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        for z, _ in pcg_iterations(self.A, v, lambda r: r / self.diagonal):
            yield z


class RpcgPreconditioner(InnerPreconditioner):
    """l inner steps = l RPCG iterations from z = 0 with factors built once."""

    name = "rpcg"
    linear = False

    def __init__(self, A: SparseMatrix, split: Optional[int] = None, schur_mode: SchurMode = "upper"):
        super().__init__(A)
        self.factors = build_factors(build_partition(A, split), schur_mode)

    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        for z, _ in rpcg_iterations(self.A, self.factors, v):
            yield z
