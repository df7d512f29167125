"""Full GMRES and BA-GMRES with inner-iteration preconditioning."""

from __future__ import annotations

import logging
import time
from typing import Optional, Union

import numpy as np

from core.errors import DimensionMismatchError, HessenbergRankError, InvalidParameterError, SolverError
from core.history import ConvergenceHistory
from core.sparse import Operator, SparseMatrix, as_vector, matvec_of, spmv_transpose
from inner.base import InnerPreconditioner, select_inner_depth
from inner.spec import InnerSpec, make_inner
from krylov.arnoldi import ArnoldiState, GivensLeastSquares, arnoldi_extend
from krylov.report import OperationCounts, SolveConfig, SolveReport

logger = logging.getLogger(__name__)


def _size(A: Operator, b: np.ndarray) -> int:
    shape = getattr(A, "shape", None)
    if shape is not None and (len(shape) != 2 or shape[0] != shape[1]):
        raise InvalidParameterError(f"GMRES needs a square matrix, got shape {shape}")
    n = shape[0] if shape is not None else np.asarray(b).shape[0]
    return n


def _relative_error(x: np.ndarray, x_star: Optional[np.ndarray]) -> Optional[float]:
    if x_star is None:
        return None
    scale = float(np.linalg.norm(x_star)) or 1.0
    return float(np.linalg.norm(x - x_star)) / scale


def _last_valid_iterate(
    x0: np.ndarray, state: ArnoldiState, lsq: GivensLeastSquares, usable: int
) -> np.ndarray:
    """x_0 + V_k y_k for the largest k <= usable whose triangular factor is nonsingular."""
    for k in range(usable, 0, -1):
        try:
            return x0 + state.V[:, :k] @ lsq.solve(k)
        except HessenbergRankError:
            continue
    return x0


def gmres_solve(
    A: Operator,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    config: Optional[SolveConfig] = None,
    x_star: Optional[np.ndarray] = None,
    label: str = "no-pre",
) -> SolveReport:
    """
    Full GMRES on A x = b.

    Stops when the Givens estimate is <= tol ||b - A x_0|| or after maxit
    iterations; the true residual of the assembled solution is then
    recomputed and reported.

    Args:
        A: Square operator (SparseMatrix, dense array or callable)
        b: Right-hand side
        x0: Initial guess (zeros if None)
        config: Tolerance and iteration cap
        x_star: Known solution, used for ``solution_error`` and history errors
        label: Report label

    Returns:
        SolveReport with status converged or failed
    """
    config = config or SolveConfig()
    started = time.perf_counter()
    n = _size(A, b)
    matvec = matvec_of(A)
    b = as_vector(b, n, "b")
    x0 = np.zeros(n) if x0 is None else as_vector(x0, n, "x0").copy()
    track = config.keep_iterates or x_star is not None

    counts = OperationCounts()
    r0 = b - matvec(x0)
    counts.matvecs += 1
    beta = float(np.linalg.norm(r0))
    history = ConvergenceHistory()
    history.record(1.0 if beta > 0.0 else 0.0, x0, x_star, config.keep_iterates)
    report = SolveReport(label=label, params={"tol": config.tol, "maxit": config.maxit})

    if beta == 0.0:
        history.true_residuals.append(0.0)
        report.x, report.error, report.residual_estimate, report.status = x0, 0.0, 0.0, "converged"
        report.solution_error = _relative_error(x0, x_star)
        report.history, report.counts = history, counts
        report.wall_time = history.wall_time = time.perf_counter() - started
        return report

    state = ArnoldiState(r0)
    lsq = GivensLeastSquares(beta)
    relative = 1.0
    usable = 0
    rank_broken = False
    for k in range(1, config.maxit + 1):
        arnoldi_extend(matvec, state)
        counts.matvecs += 1
        estimate = lsq.add_column(state.columns[-1]) / beta
        if lsq.rank_deficient:
            rank_broken = True
            report.message = f"breakdown: Hessenberg least-squares problem is rank deficient at k={k}"
            logger.warning("%s: %s", label, report.message)
            break
        relative, usable = estimate, k
        x_k = x0 + state.V[:, :k] @ lsq.solve() if track else None
        history.record(relative, x_k, x_star, config.keep_iterates)
        logger.debug("gmres iteration %d: relative estimate %.3e", k, relative)
        if relative <= config.tol or state.breakdown:
            break

    x = _last_valid_iterate(x0, state, lsq, usable)
    true_relative = float(np.linalg.norm(b - matvec(x))) / beta
    counts.check_matvecs += 1
    counts.dots = state.dots
    counts.dot_flops = state.dots * n
    history.true_residuals.append(true_relative)

    report.x = x
    report.error = true_relative
    report.residual_estimate = relative
    report.solution_error = _relative_error(x, x_star)
    report.iterations = history.iterations
    report.status = "converged" if relative <= config.tol and not rank_broken else "failed"
    if state.breakdown and report.status == "failed" and not rank_broken:
        report.message = "happy breakdown before reaching the tolerance"
    report.history, report.counts = history, counts
    report.wall_time = history.wall_time = time.perf_counter() - started
    logger.info(
        "%s: %s after %d iterations, relative residual %.3e",
        label, report.status, report.iterations, true_relative,
    )
    return report


def ba_gmres_solve(
    A: SparseMatrix,
    b: np.ndarray,
    inner: Union[InnerSpec, InnerPreconditioner],
    config: Optional[SolveConfig] = None,
    x0: Optional[np.ndarray] = None,
    x_star: Optional[np.ndarray] = None,
    label: Optional[str] = None,
) -> SolveReport:
    """
    BA-GMRES: GMRES on B A x = B b with B applied by an inner iteration.

    The inner depth l is chosen on r_0 by the residual rule (or forced by
    ``config.inner_depth``). In ``fixed`` mode every outer step reuses it;
    in ``flexible`` mode the rule is re-run for each Arnoldi vector.
    Convergence is judged on the true residual ||b - A x_k|| <= tol ||r_0||,
    checked every outer iteration; the history also holds the
    preconditioned Givens estimate. A rectangular A needs an inner method on
    the normal equations and is judged on ||A^T (b - A x_k)|| instead.

    Args:
        A: Coefficient matrix (rectangular only with ``normal_equations``)
        b: Right-hand side
        inner: Inner method spec, or an already built inner preconditioner
        config: Outer protocol and inner-depth rule
        x0: Initial guess (zeros if None)
        x_star: Known solution
        label: Report label (defaults to ``ba-gmres/<inner name>``)

    Returns:
        SolveReport with status converged or failed
    """
    config = config or SolveConfig()
    started = time.perf_counter()
    if isinstance(inner, InnerSpec):
        try:
            inner = make_inner(inner, A)
        except SolverError as exc:
            logger.error("could not build inner method %s: %s", inner.name, exc)
            raise
    label = label or f"ba-gmres/{inner.name}"
    m, n = A.shape
    if inner.m != m or inner.n != n:
        raise DimensionMismatchError(
            f"inner method {inner.name} maps length {inner.m} to {inner.n}, matrix is {m} x {n}"
        )
    b = as_vector(b, m, "b")
    x0 = np.zeros(n) if x0 is None else as_vector(x0, n, "x0").copy()
    matvec = matvec_of(A)
    inner.reset()

    counts = OperationCounts()
    history = ConvergenceHistory()
    report = SolveReport(
        label=label,
        depth_mode=config.depth_mode,
        params={
            "inner": inner.name, "tol": config.tol, "maxit": config.maxit,
            "inner_max": config.inner_max, "eta": config.eta, "inner_depth": config.inner_depth,
        },
    )

    # Least-squares problems are judged on the normal-equation residual A^T r
    def residual_norm(r: np.ndarray) -> float:
        return float(np.linalg.norm(spmv_transpose(A, r) if m != n else r))

    r0 = b - matvec(x0)
    counts.matvecs += 1
    r0_norm = residual_norm(r0)
    history.record(1.0 if r0_norm > 0.0 else 0.0, x0, x_star, config.keep_iterates)
    history.true_residuals.append(1.0 if r0_norm > 0.0 else 0.0)
    report.history, report.counts = history, counts

    if r0_norm == 0.0:
        report.x, report.error, report.residual_estimate, report.status = x0, 0.0, 0.0, "converged"
        report.solution_error = _relative_error(x0, x_star)
        report.wall_time = history.wall_time = time.perf_counter() - started
        return report

    if config.inner_depth is not None:
        depth = config.inner_depth
        z0 = inner.apply(r0, depth)
    else:
        depth, z0 = select_inner_depth(inner, A, r0, config.inner_max, config.eta)
    counts.initial_depth = inner.last_depth
    beta = float(np.linalg.norm(z0))
    if beta == 0.0:
        report.x, report.error = x0, 1.0
        report.message = "inner map returned zero for the initial residual"
        report.wall_time = history.wall_time = time.perf_counter() - started
        logger.warning("%s: %s", label, report.message)
        return report

    flexible = config.depth_mode == "flexible" and config.inner_depth is None

    def preconditioned(v: np.ndarray) -> np.ndarray:
        w = matvec(v)
        counts.matvecs += 1
        if flexible:
            _, z = select_inner_depth(inner, A, w, config.inner_max, config.eta)
        else:
            z = inner.apply(w, depth)
        report.inner_depths.append(inner.last_depth)
        counts.inner_steps += inner.last_depth
        return z

    state = ArnoldiState(z0)
    lsq = GivensLeastSquares(beta)
    x = x0
    estimate = 1.0
    true_relative = 1.0
    for k in range(1, config.maxit + 1):
        arnoldi_extend(preconditioned, state)
        estimate = lsq.add_column(state.columns[-1]) / beta
        try:
            y = lsq.solve()
        except HessenbergRankError as exc:
            report.inner_depths.pop()
            report.message = str(exc)
            logger.warning("%s: %s", label, exc)
            break
        x = x0 + state.V[:, :k] @ y
        true_relative = residual_norm(b - matvec(x)) / r0_norm
        counts.check_matvecs += 1
        history.record(estimate, x, x_star, config.keep_iterates)
        history.true_residuals.append(true_relative)
        history.inner_depths.append(report.inner_depths[-1])
        logger.debug(
            "ba-gmres iteration %d: depth %d, estimate %.3e, true %.3e",
            k, report.inner_depths[-1], estimate, true_relative,
        )
        if true_relative <= config.tol:
            report.status = "converged"
            break
        if state.breakdown:
            report.message = "happy breakdown before reaching the tolerance"
            break

    counts.dots = state.dots
    counts.dot_flops = state.dots * n
    report.x = x
    report.error = true_relative
    report.residual_estimate = estimate
    report.solution_error = _relative_error(x, x_star)
    report.iterations = history.iterations
    report.wall_time = history.wall_time = time.perf_counter() - started
    logger.info(
        "%s: %s after %d outer iterations (%d inner steps), relative residual %.3e",
        label, report.status, report.iterations, counts.inner_steps, true_relative,
    )
    return report


def operation_counts(report: SolveReport) -> OperationCounts:
    """Products with A, inner steps and orthogonalization work of a finished solve."""
    if report.status == "error":
        raise InvalidParameterError(f"report {report.label!r} has no counts: {report.message}")
    return report.counts
