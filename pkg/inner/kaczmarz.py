"""Row-action solvers: cyclic and randomized Kaczmarz and the averaged-block
variant with an extrapolated adaptive step.

All steps use the projection direction x + alpha (b_i - a_i^T x) / ||a_i||^2 a_i,
so alpha = 1 lands exactly on the hyperplane of row i. Rows with zero norm
never take part: they are skipped by cyclic sweeps and have zero sampling
probability.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import count
from typing import Iterator, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import DegenerateRowError, DimensionMismatchError, InvalidParameterError
from core.history import ConvergenceHistory
from core.settings import DEFAULT_TOL
from core.sparse import SparseMatrix, as_vector, row_norms_sq, spmv
from inner.base import InnerPreconditioner
from spectral.oracle import lambda_max_block, lambda_max_block_bound

logger = logging.getLogger(__name__)


class KaczmarzConfig(BaseModel):
    """Step rule, row selection and stopping rule of a row-action solve.

    ``alpha`` is the constant step of the single-row method and must lie in
    (0, 2). Block methods (``block_size > 1``) step with ``(2 - delta) L_k``
    in adaptive mode and with the fixed admissible step derived from
    ``delta`` and the block eigenvalue bound in constant mode.
    """

    model_config = ConfigDict(frozen=True)

    step_mode: Literal["constant", "adaptive"] = "constant"
    alpha: float = 1.0
    delta: float = Field(1.0, gt=0.0, le=1.0)
    row_selection: Literal["cyclic", "randomized"] = "cyclic"
    seed: int = 0
    block_size: int = Field(1, ge=1)
    max_steps: int = Field(10_000, ge=1)
    residual_factor: float = Field(DEFAULT_TOL, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_alpha(self) -> "KaczmarzConfig":
        if self.step_mode == "constant" and self.block_size == 1 and not 0.0 < self.alpha < 2.0:
            raise ValueError(f"constant step alpha must lie in (0, 2), got {self.alpha}")
        return self


@dataclass(frozen=True)
class BlockSample:
    """Row indices of one block with their weights (summing to 1).

    ``normalized`` holds w_i / ||a_i||^2.
    """

    indices: np.ndarray
    weights: np.ndarray
    normalized: np.ndarray

    @classmethod
    def build(cls, indices, weights, row_norms: np.ndarray) -> "BlockSample":
        indices = np.asarray(indices, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if indices.size == 0 or weights.shape != indices.shape:
            raise InvalidParameterError("a block needs one weight per row and at least one row")
        if np.any(weights <= 0.0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("block weights must be positive and sum to 1")
        norms = row_norms[indices]
        if np.any(norms == 0.0):
            raise DegenerateRowError("degenerate row: zero rows cannot join a block")
        return cls(indices, weights, weights / norms)

    @property
    def size(self) -> int:
        return int(self.indices.size)


# =============================================================================
# Single-row steps and sampling
# =============================================================================

def kaczmarz_step(A: SparseMatrix, b: np.ndarray, x: np.ndarray, i: int, alpha: float) -> np.ndarray:
    """
    One relaxed projection onto the hyperplane a_i^T x = b_i.

    Args:
        A: Coefficient matrix
        b: Right-hand side
        x: Current iterate (not modified)
        i: Row index
        alpha: Relaxation parameter

    Returns:
        x + alpha (b_i - a_i^T x) / ||a_i||^2 a_i

    Raises:
        DegenerateRowError: row ``i`` is zero
    """
    cols, vals = A.row(i)
    norm_sq = float(vals @ vals)
    if norm_sq == 0.0:
        raise DegenerateRowError(f"degenerate row {i}")
    out = np.array(x, dtype=np.float64, copy=True)
    out[cols] += alpha * (b[i] - vals @ out[cols]) / norm_sq * vals
    return out


def _row_probabilities(row_norms: np.ndarray, frobenius_sq: float) -> np.ndarray:
    if frobenius_sq <= 0.0:
        raise DegenerateRowError("degenerate row: every row of the matrix is zero")
    p = np.asarray(row_norms, dtype=np.float64) / frobenius_sq
    if abs(p.sum() - 1.0) > 1e-8:
        raise InvalidParameterError("squared row norms do not add up to the Frobenius norm")
    return p / p.sum()


def sample_row(row_norms: np.ndarray, frobenius_sq: float, rng: np.random.Generator) -> int:
    """Draw row i with probability ||a_i||^2 / ||A||_F^2."""
    p = _row_probabilities(row_norms, frobenius_sq)
    return int(rng.choice(p.size, p=p))


def sample_rows(
    row_norms: np.ndarray, frobenius_sq: float, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Vectorised :func:`sample_row`: ``size`` independent draws."""
    p = _row_probabilities(row_norms, frobenius_sq)
    return rng.choice(p.size, size=size, p=p)


def sample_block(row_norms: np.ndarray, tau: int, rng: np.random.Generator) -> BlockSample:
    """
    Draw tau distinct rows with probabilities proportional to ||a_i||^2.

    Weights are uniform, w_i = 1/tau.
    """
    nonzero = np.flatnonzero(row_norms > 0)
    if tau < 1 or tau > nonzero.size:
        raise InvalidParameterError(f"block size {tau} outside [1, {nonzero.size}]")
    p = row_norms[nonzero] / row_norms[nonzero].sum()
    indices = rng.choice(nonzero, size=tau, replace=False, p=p)
    return BlockSample.build(indices, np.full(tau, 1.0 / tau), row_norms)


def cyclic_blocks(row_norms: np.ndarray, tau: int) -> list[BlockSample]:
    """Consecutive blocks of tau nonzero rows; the last block may be shorter."""
    nonzero = np.flatnonzero(row_norms > 0)
    if tau < 1 or tau > nonzero.size:
        raise InvalidParameterError(f"block size {tau} outside [1, {nonzero.size}]")
    blocks = []
    for start in range(0, nonzero.size, tau):
        chunk = nonzero[start:start + tau]
        blocks.append(BlockSample.build(chunk, np.full(chunk.size, 1.0 / chunk.size), row_norms))
    return blocks


# =============================================================================
# Block steps
# =============================================================================

@dataclass
class _CompactBlock:
    """Dense rows of one block restricted to the columns they touch."""

    sample: BlockSample
    cols: np.ndarray
    rows: np.ndarray
    _lambda_max: Optional[float] = field(default=None, repr=False)

    @classmethod
    def from_sample(cls, A: SparseMatrix, sample: BlockSample) -> "_CompactBlock":
        sub = A.csr[sample.indices]
        cols = np.unique(sub.indices)
        return cls(sample, cols, sub[:, cols].toarray())

    def lambda_max(self) -> float:
        if self._lambda_max is None:
            scaled = self.rows * np.sqrt(self.sample.normalized)[:, None]
            self._lambda_max = float(np.linalg.eigvalsh(scaled @ scaled.T)[-1])
        return self._lambda_max

    def residual(self, x: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.rows @ x[self.cols] - b[self.sample.indices]

    def step_length(self, residual: np.ndarray) -> tuple[float, np.ndarray]:
        """``(L_k, direction)`` with direction = sum_i w_i r_i / ||a_i||^2 a_i (on ``cols``)."""
        weighted = self.sample.normalized * residual
        direction = self.rows.T @ weighted
        if np.any(residual != 0.0):
            if self.sample.size == 1:
                return 1.0, direction
            denom = float(direction @ direction)
            if denom > 0.0:
                return float(weighted @ residual) / denom, direction
        return 1.0 / self.lambda_max(), direction


def rabk_step_size(
    A: SparseMatrix, x: np.ndarray, b: np.ndarray, block: BlockSample, delta: float
) -> tuple[float, float]:
    """
    Extrapolated step of the averaged-block method.

    With r_i = a_i^T x - b_i and w-bar_i = w_i / ||a_i||^2,
    L_k = sum w-bar_i r_i^2 / ||sum w-bar_i r_i a_i||^2 when some r_i is
    nonzero, otherwise 1 / lambda_max(A_J^T diag(w-bar) A_J).

    Returns:
        ``(alpha_k, L_k)`` with alpha_k = (2 - delta) L_k
    """
    if not 0.0 < delta <= 1.0:
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")
    x = as_vector(x, A.n_cols, "x")
    b = as_vector(b, A.n_rows, "b")
    compact = _CompactBlock.from_sample(A, block)
    residual = compact.residual(x, b)
    if not np.any(residual != 0.0):
        compact._lambda_max = lambda_max_block(A, block.indices, block.normalized)
    L, _ = compact.step_length(residual)
    return (2.0 - delta) * L, L


def rabk_theorem_step(tau: int, delta: float, lambda_block: float) -> float:
    """Fixed admissible step (2 - delta) w_min / (w_max^2 lambda_block) for w_i = 1/tau."""
    if lambda_block <= 0.0:
        raise InvalidParameterError("block eigenvalue bound must be positive")
    w = 1.0 / tau
    return (2.0 - delta) * w / (w * w * lambda_block)


# =============================================================================
# Standalone solvers
# =============================================================================

def _start(A: SparseMatrix, b, x0) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    b = as_vector(b, A.n_rows, "b")
    x = np.zeros(A.n_cols) if x0 is None else as_vector(x0, A.n_cols, "x0").copy()
    norms = row_norms_sq(A)
    total = float(norms.sum())
    if total == 0.0:
        raise DegenerateRowError("degenerate row: every row of the matrix is zero")
    return b, x, norms, total


def rk_solve(
    A: SparseMatrix,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    config: Optional[KaczmarzConfig] = None,
    x_star: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, ConvergenceHistory]:
    """
    Single-row Kaczmarz with constant step, cyclic or randomized rows.

    Stops when ||b - A x|| <= residual_factor ||b|| or after max_steps row
    projections. The history holds the relative residual after every step
    and, when ``x_star`` is given, ||x_k - x*||.

    Args:
        A: Coefficient matrix (m x n)
        b: Right-hand side (length m)
        x0: Initial iterate (zeros if None)
        config: Step and stopping parameters; ``step_mode`` must be constant
        x_star: Known solution, recorded for error tracking only

    Returns:
        ``(x, history)``
    """
    config = config or KaczmarzConfig()
    if config.step_mode != "constant":
        raise InvalidParameterError("rk_solve takes a constant step; use rabk_solve for adaptive steps")
    b, x, norms, total = _start(A, b, x0)
    if x_star is not None:
        x_star = as_vector(x_star, A.n_cols, "x_star")

    scale = float(np.linalg.norm(b)) or 1.0
    target = config.residual_factor * scale
    history = ConvergenceHistory()
    residual = float(np.linalg.norm(b - spmv(A, x)))
    history.record(residual / scale, x, x_star)

    nonzero = np.flatnonzero(norms > 0)
    rng = np.random.default_rng(config.seed)
    for k in range(config.max_steps):
        if residual <= target:
            break
        if config.row_selection == "cyclic":
            i = int(nonzero[k % nonzero.size])
        else:
            i = sample_row(norms, total, rng)
        cols, vals = A.row(i)
        x[cols] += config.alpha * (b[i] - vals @ x[cols]) / norms[i] * vals
        residual = float(np.linalg.norm(b - spmv(A, x)))
        history.record(residual / scale, x, x_star)

    logger.info("rk_solve: %d steps, relative residual %.3e", history.iterations, residual / scale)
    return x, history


def rabk_solve(
    A: SparseMatrix,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    config: Optional[KaczmarzConfig] = None,
    x_star: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, ConvergenceHistory]:
    """
    Averaged-block Kaczmarz.

    Each iteration takes a block J (sampled or cyclic), forms the averaged
    direction d = sum_{i in J} w-bar_i (a_i^T x - b_i) a_i and sets
    x <- x - alpha d, with alpha from :func:`rabk_step_size` in adaptive mode
    or :func:`rabk_theorem_step` in constant mode.
    """
    config = config or KaczmarzConfig(step_mode="adaptive")
    b, x, norms, _ = _start(A, b, x0)
    if x_star is not None:
        x_star = as_vector(x_star, A.n_cols, "x_star")
    tau = config.block_size

    rng = np.random.default_rng(config.seed)
    if config.row_selection == "cyclic":
        cycle = [_CompactBlock.from_sample(A, s) for s in cyclic_blocks(norms, tau)]
        next_block = lambda k: cycle[k % len(cycle)]
    else:
        next_block = lambda k: _CompactBlock.from_sample(A, sample_block(norms, tau, rng))

    constant_alpha = None
    if config.step_mode == "constant":
        constant_alpha = rabk_theorem_step(tau, config.delta, lambda_max_block_bound(A, tau))

    scale = float(np.linalg.norm(b)) or 1.0
    target = config.residual_factor * scale
    history = ConvergenceHistory()
    residual = float(np.linalg.norm(b - spmv(A, x)))
    history.record(residual / scale, x, x_star)

    for k in range(config.max_steps):
        if residual <= target:
            break
        block = next_block(k)
        L, direction = block.step_length(block.residual(x, b))
        if constant_alpha is None:
            alpha = (2.0 - config.delta) * L
        else:
            # a short trailing block carries larger weights 1/|J|
            alpha = constant_alpha * block.sample.size / tau
        x[block.cols] -= alpha * direction
        residual = float(np.linalg.norm(b - spmv(A, x)))
        history.record(residual / scale, x, x_star)

    logger.info(
        "rabk_solve: %d iterations (tau=%d, %s), relative residual %.3e",
        history.iterations, tau, config.step_mode, residual / scale,
    )
    return x, history


# =============================================================================
# Inner preconditioner
# =============================================================================

class KaczmarzPreconditioner(InnerPreconditioner):
    """
    Row-action inner map for BA-GMRES.

    One inner iteration is one pass over the equations: m_nz projections in
    single-row modes, ceil(m_nz / tau) block steps in block modes. The
    randomized row or block sequence is drawn from ``config.seed`` after
    :meth:`reset` and replayed identically by every apply until the next
    reset, so constant-step modes are a fixed linear map per outer solve.
    """

    def __init__(self, A: SparseMatrix, config: Optional[KaczmarzConfig] = None):
        super().__init__(A)
        self.config = config or KaczmarzConfig()
        self.norms = row_norms_sq(A)
        self.nonzero = np.flatnonzero(self.norms > 0)
        if self.nonzero.size == 0:
            raise DegenerateRowError("degenerate row: every row of the matrix is zero")
        if self.config.block_size > self.nonzero.size:
            raise InvalidParameterError(
                f"block size {self.config.block_size} exceeds the {self.nonzero.size} nonzero rows"
            )

        random = self.config.row_selection == "randomized"
        adaptive = self.config.step_mode == "adaptive"
        self.name = "kaczmarz" + ("-adaptive" if adaptive else "") + ("-random" if random else "")
        # Single-row adaptive steps reduce to the constant 2 - delta
        self.linear = not (adaptive and self.blocked)

        self._rows = [A.row(i) for i in range(A.n_rows)]
        self._cyclic: Optional[list[_CompactBlock]] = None
        self._constant_alpha: Optional[float] = None
        self.reset()

    @property
    def blocked(self) -> bool:
        return self.config.block_size > 1

    def reset(self) -> None:
        self._rng = np.random.default_rng(self.config.seed)
        self._passes: list = []

    def _pass(self, p: int):
        """Row or block sequence of pass ``p`` (drawn on first use, then replayed)."""
        cfg = self.config
        if cfg.row_selection == "cyclic":
            if not self.blocked:
                return self.nonzero
            if self._cyclic is None:
                self._cyclic = [_CompactBlock.from_sample(self.A, s) for s in cyclic_blocks(self.norms, cfg.block_size)]
            return self._cyclic
        while len(self._passes) <= p:
            if self.blocked:
                steps = -(-self.nonzero.size // cfg.block_size)
                self._passes.append([
                    _CompactBlock.from_sample(self.A, sample_block(self.norms, cfg.block_size, self._rng))
                    for _ in range(steps)
                ])
            else:
                total = float(self.norms.sum())
                self._passes.append(sample_rows(self.norms, total, self._rng, self.nonzero.size))
        return self._passes[p]

    def _block_alpha(self, L: float, size: int) -> float:
        tau = self.config.block_size
        if self.config.step_mode == "adaptive":
            return (2.0 - self.config.delta) * L
        if self._constant_alpha is None:
            self._constant_alpha = rabk_theorem_step(
                tau, self.config.delta, lambda_max_block_bound(self.A, tau)
            )
        return self._constant_alpha * size / tau

    def iterate(self, v: np.ndarray) -> Iterator[np.ndarray]:
        if v.shape != (self.A.n_rows,):
            raise DimensionMismatchError(f"inner right-hand side must have length {self.A.n_rows}")
        z = np.zeros(self.A.n_cols)
        if self.blocked:
            for p in count():
                for block in self._pass(p):
                    L, direction = block.step_length(block.residual(z, v))
                    z[block.cols] -= self._block_alpha(L, block.sample.size) * direction
                yield z
        else:
            # Single-row adaptive steps reduce to L_k = 1
            alpha = 2.0 - self.config.delta if self.config.step_mode == "adaptive" else self.config.alpha
            for p in count():
                for i in self._pass(p):
                    cols, vals = self._rows[i]
                    z[cols] += alpha * (v[i] - vals @ z[cols]) / self.norms[i] * vals
                yield z
