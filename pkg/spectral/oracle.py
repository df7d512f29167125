"""Dense spectral computations used by the rate checks and reports.

Everything here is desk scale: inputs are converted to dense arrays and
refused beyond the dense cap. Eigenvalues come from LAPACK (Hessenberg
reduction followed by shifted QR).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Literal, Optional, Sequence, Union

import numpy as np
import scipy.linalg as la

from core.errors import (
    DimensionMismatchError,
    EigenvalueConvergenceError,
    InvalidParameterError,
    SingularMatrixError,
)
from core.sparse import SparseMatrix, row_norms_sq, to_dense

logger = logging.getLogger(__name__)

MatrixLike = Union[SparseMatrix, np.ndarray]

# Semisimplicity of eigenvalue 1 is judged by numerical rank at this relative tolerance
RANK_TOL = 1e-8
UNIT_TOL = 1e-10
# Blocks are enumerated exactly up to this many subsets
MAX_ENUMERATED_BLOCKS = 2000


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    spectral_radius: float
    min_nonzero_eig: Optional[float]
    condition_2: Optional[float]


def _square(M: MatrixLike) -> np.ndarray:
    dense = to_dense(M)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {dense.shape}")
    return dense


def dense_eigenvalues(M: MatrixLike) -> np.ndarray:
    """
    All eigenvalues of a square matrix.

    Exactly symmetric input goes through the symmetric solver, so its
    eigenvalues are real. The result is sorted by (real, imag).

    Args:
        M: Square matrix at desk scale

    Returns:
        Complex array of the n eigenvalues

    Raises:
        EigenvalueConvergenceError: LAPACK did not converge
    """
    dense = _square(M)
    if dense.size == 0:
        return np.zeros(0, dtype=complex)
    try:
        if np.array_equal(dense, dense.T):
            values = la.eigvalsh(dense).astype(complex)
        else:
            values = la.eigvals(dense)
    except la.LinAlgError as exc:
        raise EigenvalueConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    order = np.lexsort((values.imag, values.real))
    return values[order]


def spectral_radius(M: MatrixLike) -> float:
    values = dense_eigenvalues(M)
    return float(np.max(np.abs(values))) if values.size else 0.0


def min_nonzero_eig_gram(A: MatrixLike, side: Literal["AtA", "AAt"] = "AtA") -> float:
    """
    Smallest nonzero eigenvalue of ``A^T A`` or ``A A^T``.

    An eigenvalue counts as nonzero when it exceeds 1e-10 times the largest.

    Args:
        A: Matrix at desk scale
        side: Which Gram matrix to form

    Returns:
        lambda_min^nz of the chosen Gram matrix
    """
    dense = to_dense(A)
    if side == "AtA":
        gram = dense.T @ dense
    elif side == "AAt":
        gram = dense @ dense.T
    else:
        raise InvalidParameterError(f"side must be 'AtA' or 'AAt', got {side!r}")
    values = la.eigvalsh(gram) if gram.size else np.zeros(0)
    top = values.max() if values.size else 0.0
    if top <= 0.0:
        raise SingularMatrixError("Gram matrix has no nonzero eigenvalue (zero matrix)")
    nonzero = values[values > 1e-10 * top]
    return float(nonzero.min())


def _row_block(A: MatrixLike, J: Sequence[int]) -> np.ndarray:
    J = np.asarray(J, dtype=np.int64)
    if isinstance(A, SparseMatrix):
        return A.csr[J].toarray()
    return np.asarray(A, dtype=np.float64)[J]


def lambda_max_block(A: MatrixLike, J: Sequence[int], weights: Sequence[float]) -> float:
    """
    Largest eigenvalue of ``A_J^T diag(weights) A_J``.

    Computed on the |J| x |J| Gram side, which has the same nonzero spectrum.
    """
    if len(J) == 0:
        raise InvalidParameterError("block must be nonempty")
    rows = _row_block(A, J)
    root = np.sqrt(np.asarray(weights, dtype=np.float64))
    scaled = rows * root[:, None]
    return float(la.eigvalsh(scaled @ scaled.T)[-1])


def lambda_max_block_bound(A: SparseMatrix, tau: int, max_blocks: int = MAX_ENUMERATED_BLOCKS) -> float:
    """
    Upper bound on lambda_max(A_J^T diag(1/||a_i||^2) A_J) over all |J| = tau.

    Exact maximum by enumeration when the number of blocks is small, otherwise
    min(tau, lambda_max of the full normalized Gram matrix).
    """
    norms = row_norms_sq(A)
    rows = np.flatnonzero(norms > 0)
    if tau < 1 or tau > rows.size:
        raise InvalidParameterError(f"block size {tau} outside [1, {rows.size}]")
    if comb(rows.size, tau) <= max_blocks:
        dense = _row_block(A, rows) / np.sqrt(norms[rows])[:, None]
        best = 0.0
        for J in combinations(range(rows.size), tau):
            block = dense[list(J)]
            best = max(best, float(la.eigvalsh(block @ block.T)[-1]))
        return best
    full = lambda_max_block(A, rows, 1.0 / norms[rows])
    return min(float(tau), full)


def build_W(A: MatrixLike, probabilities: Sequence[float]) -> np.ndarray:
    """
    The positive semidefinite matrix ``A^T diag(p_i / ||a_i||^2) A``.

    Args:
        A: Matrix at desk scale
        probabilities: Row probabilities summing to 1 over the nonzero rows

    Returns:
        Dense symmetric n x n matrix W
    """
    dense = to_dense(A)
    p = np.asarray(probabilities, dtype=np.float64)
    if p.shape != (dense.shape[0],):
        raise DimensionMismatchError(f"need one probability per row, got {p.shape}")
    norms = np.einsum("ij,ij->i", dense, dense)
    nonzero = norms > 0
    if np.any(p < 0) or abs(p[nonzero].sum() - 1.0) > 1e-12:
        raise InvalidParameterError("probabilities must be non-negative and sum to 1 over nonzero rows")
    scale = np.zeros_like(p)
    scale[nonzero] = p[nonzero] / norms[nonzero]
    W = dense.T @ (dense * scale[:, None])
    return 0.5 * (W + W.T)


def powers_converge(H: MatrixLike, max_doublings: int = 20, tol: float = 1e-6) -> bool:
    """
    Power-sequence oracle for the existence of lim H^i.

    Squares repeatedly, P_j = H^(2^j), and accepts when both
    ||P_j H - P_j|| and ||P_{j+1} - P_j|| are small relative to ||P_j||
    at the last doubling. Overflow counts as divergence.
    """
    P = _square(H)
    if P.size == 0:
        return True
    dense = P.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_doublings):
            P = P @ P
            if not np.all(np.isfinite(P)):
                return False
        following = P @ P
        step = P @ dense
        if not (np.all(np.isfinite(following)) and np.all(np.isfinite(step))):
            return False
        scale = max(1.0, float(np.linalg.norm(P)))
        return (
            float(np.linalg.norm(step - P)) <= tol * scale
            and float(np.linalg.norm(following - P)) <= tol * scale
        )


def is_semi_convergent(H: MatrixLike) -> bool:
    """
    Whether lim_{i -> inf} H^i exists.

    True iff rho(H) < 1, or rho(H) = 1 with 1 the only unit-modulus
    eigenvalue and 1 semisimple (geometric multiplicity, from the numerical
    rank of H - I, equals algebraic multiplicity). The verdict is
    cross-checked against :func:`powers_converge`; a disagreement is logged.
    """
    dense = _square(H)
    n = dense.shape[0]
    if n == 0:
        return True
    values = dense_eigenvalues(dense)
    moduli = np.abs(values)
    rho = float(moduli.max())

    if rho < 1.0 - UNIT_TOL:
        verdict = True
    elif rho > 1.0 + UNIT_TOL:
        verdict = False
    else:
        on_circle = moduli >= 1.0 - UNIT_TOL
        at_one = on_circle & (np.abs(values - 1.0) <= 1e-6)
        if np.any(on_circle & ~at_one):
            verdict = False
        else:
            algebraic = int(at_one.sum())
            shifted = dense - np.eye(n)
            singular = la.svdvals(shifted)
            cutoff = RANK_TOL * max(float(np.linalg.norm(dense)), 1.0)
            geometric = n - int(np.sum(singular > cutoff))
            verdict = geometric == algebraic

    if powers_converge(dense) != verdict:
        logger.warning("semi-convergence: spectral verdict %s disagrees with the power oracle", verdict)
    return verdict


def condition_2(M: MatrixLike) -> float:
    """
    Euclidean condition number sigma_max / sigma_min from the singular values.

    Raises:
        SingularMatrixError: smallest singular value is at or below
            max(shape) * eps * sigma_max
    """
    dense = _square(M)
    singular = la.svdvals(dense)
    if singular.size == 0:
        raise SingularMatrixError("condition number of an empty matrix")
    top, bottom = float(singular[0]), float(singular[-1])
    if top <= 0.0 or bottom <= max(dense.shape) * np.finfo(np.float64).eps * top:
        raise SingularMatrixError("matrix is numerically singular")
    return top / bottom


def spectral_condition(M: MatrixLike) -> float:
    """Ratio of the largest to the smallest eigenvalue modulus (similarity invariant)."""
    moduli = np.abs(dense_eigenvalues(M))
    if moduli.size == 0 or moduli.min() <= 1e-14 * moduli.max():
        raise SingularMatrixError("matrix has a numerically zero eigenvalue")
    return float(moduli.max() / moduli.min())


def spectral_summary(M: MatrixLike) -> SpectralSummary:
    """Eigenvalues, spectral radius, and (when defined) lambda_min^nz and condition number."""
    dense = _square(M)
    values = dense_eigenvalues(dense)
    rho = float(np.max(np.abs(values))) if values.size else 0.0

    min_nz = None
    if np.array_equal(dense, dense.T) and values.size and values.real.min() >= -1e-10 * max(rho, 1.0):
        positive = values.real[values.real > 1e-10 * max(rho, 1e-300)]
        min_nz = float(positive.min()) if positive.size else None

    try:
        cond = condition_2(dense)
    except SingularMatrixError:
        cond = None
    return SpectralSummary(values, rho, min_nz, cond)
