"""Inner-iteration preconditioner interface and the stationary reference inners."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Iterator

import numpy as np
import scipy.linalg as la

from core.errors import DimensionMismatchError, InvalidParameterError, SingularMatrixError
from core.sparse import SparseMatrix, as_vector, spmv, spmv_transpose, to_dense

logger = logging.getLogger(__name__)


class InnerPreconditioner(ABC):
    """The map v -> z obtained by running inner steps on A z = v from z = 0.

    Subclasses implement :meth:`iterate`. ``linear`` is True when the map
    for a fixed depth is a fixed linear operator (stationary splittings and
    frozen-sequence constant-step row methods); adaptive steps and CG-type
    inners are nonlinear in v.
    """

    name: str = "inner"
    linear: bool = True

    def __init__(self, A: SparseMatrix):
        if A.n_rows != A.n_cols:
            raise DimensionMismatchError(
                f"inner methods need a square matrix, got {A.shape}; use the normal equations for rectangular systems"
            )
        self.A = A
        self.n = A.n_rows
        # Length of the right-hand sides passed to apply
        self.m = A.n_rows
        self.last_depth = 0
        self.total_steps = 0

    def reset(self) -> None:
        """Called once at the start of every outer solve."""

    @abstractmethod
    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        """Yield the inner iterate after each step on A z = v, starting from z = 0."""

    def apply(self, v: np.ndarray, depth: int) -> np.ndarray:
        """Run ``depth`` inner steps (fewer if the method terminates exactly)."""
        if depth < 1:
            raise InvalidParameterError(f"inner depth must be >= 1, got {depth}")
        v = as_vector(v, self.m, "v")
        z = np.zeros(self.n)
        steps = 0
        for steps, z in enumerate(self.iterate(v), start=1):
            if steps >= depth:
                break
        self.last_depth = steps
        self.total_steps += steps
        return np.array(z, copy=True)

    def residual_norm(self, A: SparseMatrix, v: np.ndarray, z: np.ndarray) -> float:
        """Norm of the inner-system residual v - A z."""
        return float(np.linalg.norm(v - spmv(A, z)))

    def rhs_norm(self, v: np.ndarray) -> float:
        return float(np.linalg.norm(v))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


def select_inner_depth(
    inner: InnerPreconditioner,
    A: SparseMatrix,
    v: np.ndarray,
    ell_max: int,
    eta: float,
) -> tuple[int, np.ndarray]:
    """
    Smallest inner depth meeting the residual test, capped at ``ell_max``.

    Runs the inner iteration on A z = v from z = 0 and stops at the first
    l with ||v - A z_l|| <= eta ||v||, or at l = ell_max. Inners on the
    normal equations test ||A^T (v - A z_l)|| <= eta ||A^T v|| instead.

    Args:
        inner: Inner method
        A: Coefficient matrix
        v: Right-hand side of the inner system
        ell_max: Depth cap (>= 1)
        eta: Residual factor in (0, 1]

    Returns:
        ``(l, z_l)``
    """
    if ell_max < 1:
        raise InvalidParameterError(f"ell_max must be >= 1, got {ell_max}")
    if not 0.0 < eta <= 1.0:
        raise InvalidParameterError(f"eta must lie in (0, 1], got {eta}")
    v = as_vector(v, inner.m, "v")
    target = eta * inner.rhs_norm(v)
    z = np.zeros(inner.n)
    ell = 0
    for ell, z in enumerate(inner.iterate(v), start=1):
        if ell >= ell_max or inner.residual_norm(A, v, z) <= target:
            break
    inner.last_depth = ell
    inner.total_steps += ell
    logger.debug("%s: inner depth %d selected (cap %d, eta %g)", inner.name, ell, ell_max, eta)
    return ell, np.array(z, copy=True)


def dense_inner_map(inner: InnerPreconditioner, depth: int) -> np.ndarray:
    """Explicit matrix of a linear inner map at fixed depth (columns = apply(e_j))."""
    if not inner.linear:
        raise InvalidParameterError(f"{inner.name} is not a linear map")
    columns = [inner.apply(e, depth) for e in np.eye(inner.m)]
    return np.column_stack(columns)


class JacobiPreconditioner(InnerPreconditioner):
    """Stationary Jacobi splitting A = M - N with M = diag(A) (zeros patched to 1)."""

    name = "jacobi"
    linear = True

    def __init__(self, A: SparseMatrix):
        super().__init__(A)
        diagonal = A.diagonal().copy()
        diagonal[diagonal == 0.0] = 1.0
        self.diagonal = diagonal

    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        z = np.zeros(self.n)
        while True:
            z = z + (v - spmv(self.A, z)) / self.diagonal
            yield z

    def splitting(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``(M, N)`` with A = M - N."""
        M = np.diag(self.diagonal)
        return M, M - to_dense(self.A)


class ExactPreconditioner(InnerPreconditioner):
    """Dense LU solve: one inner step returns A^-1 v."""

    name = "exact"
    linear = True

    def __init__(self, A: SparseMatrix):
        super().__init__(A)
        dense = to_dense(A)
        with np.errstate(divide="ignore", invalid="ignore"):
            self._lu = la.lu_factor(dense, check_finite=True)
        if np.any(np.diag(self._lu[0]) == 0.0):
            raise SingularMatrixError("exact inner solve needs a nonsingular matrix")

    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        yield la.lu_solve(self._lu, v)


class NormalEquationsPreconditioner(InnerPreconditioner):
    """Inner method run on A^T A z = A^T v for a rectangular (or any) A.

    ``inner`` must be built on the Gram matrix A^T A. Right-hand sides have
    length ``A.n_rows`` and the results length ``A.n_cols``.
    """

    def __init__(self, A: SparseMatrix, inner: InnerPreconditioner):
        if inner.n != A.n_cols:
            raise DimensionMismatchError(
                f"inner method has order {inner.n}, the Gram matrix of {A.shape} has order {A.n_cols}"
            )
        super().__init__(inner.A)
        self.matrix = A
        self.inner = inner
        self.m = A.n_rows
        self.name = f"{inner.name}-normal"
        self.linear = inner.linear

    def reset(self) -> None:
        self.inner.reset()

    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        yield from self.inner.iterate(spmv_transpose(self.matrix, v))

    def residual_norm(self, A: SparseMatrix, v: np.ndarray, z: np.ndarray) -> float:
        return float(np.linalg.norm(spmv_transpose(A, v - spmv(A, z))))

    def rhs_norm(self, v: np.ndarray) -> float:
        return float(np.linalg.norm(spmv_transpose(self.matrix, v)))


def gram_matrix(A: SparseMatrix) -> SparseMatrix:
    """A^T A, symmetrized so that it is exactly symmetric in floating point."""
    gram = A.csr.T @ A.csr
    return SparseMatrix.from_scipy(((gram + gram.T) * 0.5).tocsr())
