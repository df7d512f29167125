"""
Experiment harness: matrix ingestion, method runs, tables and convergence
histories.

Methods are addressed by the labels used in the result tables:

- no-pre:      plain GMRES
- pre-1:       BA-GMRES, cyclic Kaczmarz with alpha = 1
- pre-adapt:   BA-GMRES, averaged-block Kaczmarz with adaptive steps, cyclic blocks
- pre-adapt-r: same with randomized blocks
- ADI-pre:     BA-GMRES, ADI sweeps on the Jacobi-scaled matrix
- PCG-pre:     BA-GMRES, Jacobi-preconditioned CG
- rpcg-pre:    BA-GMRES, restricted preconditioned CG
"""

from __future__ import annotations

import asyncio
import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import InvalidParameterError, SolverError
from core.generators import GENERATORS
from core.market import read_matrix_market
from core.settings import DEFAULT_ADI_ALPHA
from core.sparse import SparseMatrix, as_vector, spmv
from inner.spec import InnerSpec
from krylov.gmres import ba_gmres_solve, gmres_solve
from krylov.report import SolveConfig, SolveReport
from memory.store import ReportStore, get_report_store

logger = logging.getLogger(__name__)

METHOD_LABELS = ("no-pre", "pre-1", "pre-adapt", "pre-adapt-r", "ADI-pre", "PCG-pre", "rpcg-pre")
TABLE_ROWS = ("error", "iteration", "time")
HISTORY_HEADER = "iteration,relative_residual,true_relative_residual"


# =============================================================================
# Configuration
# =============================================================================

class MatrixSource(BaseModel):
    """Either a Matrix Market file or a named generator."""

    model_config = ConfigDict(frozen=True)

    path: Optional[str] = None
    generator: Optional[Literal["tridiag", "random"]] = None
    n: int = Field(100, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _one_source(self) -> "MatrixSource":
        if (self.path is None) == (self.generator is None):
            raise ValueError("give exactly one of a matrix file or a generator")
        return self

    @property
    def name(self) -> str:
        if self.path is not None:
            return Path(self.path).stem
        if self.generator == "random":
            return f"random-{self.n}-s{self.seed}"
        return f"{self.generator}-{self.n}"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    matrix: MatrixSource
    methods: list[str] = Field(min_length=1)
    rhs_mode: Literal["ones", "random", "file"] = "ones"
    rhs_seed: int = 0
    rhs_path: Optional[str] = None
    solve: SolveConfig = SolveConfig()
    adi_alpha: float = Field(DEFAULT_ADI_ALPHA, gt=0.0)
    delta: float = Field(0.5, gt=0.0, le=1.0)
    block_size: int = Field(4, ge=1)
    split: Optional[int] = Field(None, ge=1)
    kaczmarz_seed: int = 0
    output: Optional[str] = None

    @model_validator(mode="after")
    def _rhs_file(self) -> "ExperimentConfig":
        if (self.rhs_mode == "file") != (self.rhs_path is not None):
            raise ValueError("rhs_mode 'file' and rhs_path go together")
        return self


@dataclass
class Problem:
    name: str
    A: SparseMatrix
    b: np.ndarray
    x_star: Optional[np.ndarray]


# =============================================================================
# Problem setup
# =============================================================================

def load_matrix(source: MatrixSource) -> SparseMatrix:
    """Read the matrix file or run the generator."""
    if source.path is not None:
        return read_matrix_market(source.path)
    return GENERATORS[source.generator](source.n, seed=source.seed)


def build_rhs(A: SparseMatrix, config: ExperimentConfig) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Right-hand side and, when known, the exact solution.

    ``ones`` sets b = A 1 so the solution is the all-ones vector.
    """
    n = A.n_rows
    if config.rhs_mode == "ones":
        x_star = np.ones(A.n_cols)
        return spmv(A, x_star), x_star
    if config.rhs_mode == "random":
        return np.random.default_rng(config.rhs_seed).standard_normal(n), None

    path = Path(config.rhs_path)
    if not path.is_file():
        raise FileNotFoundError(f"right-hand side file not found: {path}")
    values = np.loadtxt(path, comments="%", ndmin=1)
    return as_vector(values.ravel(), n, f"right-hand side from {path}"), None


def prepare(config: ExperimentConfig) -> Problem:
    A = load_matrix(config.matrix)
    if A.n_rows != A.n_cols:
        raise InvalidParameterError(f"experiments need a square matrix, got {A.shape}")
    b, x_star = build_rhs(A, config)
    logger.info("problem %s: n=%d, nnz=%d", config.matrix.name, A.n_rows, A.nnz)
    return Problem(config.matrix.name, A, b, x_star)


def inner_spec_for(label: str, config: ExperimentConfig) -> Optional[InnerSpec]:
    """Inner method behind a table label (None for plain GMRES)."""
    if label == "no-pre":
        return None
    if label == "pre-1":
        return InnerSpec(name="kaczmarz", alpha=1.0)
    if label == "pre-adapt":
        return InnerSpec(name="kaczmarz-adaptive", delta=config.delta, block_size=config.block_size)
    if label == "pre-adapt-r":
        return InnerSpec(
            name="kaczmarz-adaptive-random", delta=config.delta,
            block_size=config.block_size, seed=config.kaczmarz_seed,
        )
    if label == "ADI-pre":
        return InnerSpec(name="adi", alpha=config.adi_alpha)
    if label == "PCG-pre":
        return InnerSpec(name="pcg")
    if label == "rpcg-pre":
        return InnerSpec(name="rpcg", split=config.split)
    raise InvalidParameterError(f"unknown method label {label!r}; expected one of {', '.join(METHOD_LABELS)}")


# =============================================================================
# Runs
# =============================================================================

def run_method(problem: Problem, label: str, config: ExperimentConfig) -> SolveReport:
    """Run one method; failures become a report with status ``error``."""
    try:
        spec = inner_spec_for(label, config)
        if spec is None:
            return gmres_solve(problem.A, problem.b, config=config.solve, x_star=problem.x_star, label=label)
        return ba_gmres_solve(
            problem.A, problem.b, spec, config.solve, x_star=problem.x_star, label=label
        )
    except (SolverError, ValueError) as exc:
        logger.error("%s on %s failed: %s", label, problem.name, exc)
        return SolveReport.from_error(label, exc, {"maxit": config.solve.maxit})


def run_problem(
    problem: Problem, config: ExperimentConfig, store: Optional[ReportStore] = None
) -> list[SolveReport]:
    store = store or get_report_store()
    reports = []
    for label in config.methods:
        report = run_method(problem, label, config)
        store.save_report(problem.name, report)
        reports.append(report)
    return reports


def run_experiment(config: ExperimentConfig, store: Optional[ReportStore] = None) -> list[SolveReport]:
    """
    Run every configured method once on the configured problem.

    Matrix loading errors propagate; per-method errors are captured in the
    corresponding report and never stop the batch.

    Returns:
        One SolveReport per method, in configuration order
    """
    return run_problem(prepare(config), config, store)


async def run_experiment_async(
    config: ExperimentConfig, store: Optional[ReportStore] = None
) -> list[SolveReport]:
    """Same as :func:`run_experiment` with the methods run concurrently in threads."""
    store = store or get_report_store()
    problem = await asyncio.to_thread(prepare, config)
    reports = await asyncio.gather(
        *(asyncio.to_thread(run_method, problem, label, config) for label in config.methods)
    )
    for report in reports:
        store.save_report(problem.name, report)
    return list(reports)


# =============================================================================
# Emission
# =============================================================================

def _cells(report: SolveReport) -> dict[str, str]:
    if report.status == "error":
        return {"error": "-", "iteration": "-", "time": "-"}
    if report.status == "failed":
        maxit = report.params.get("maxit", report.iterations)
        error, iteration = "-", str(maxit)
    else:
        error, iteration = f"{report.error:.5e}", str(report.iterations)
    return {"error": error, "iteration": iteration, "time": f"{report.wall_time:.5e}"}


def emit_table(
    reports: list[SolveReport],
    fmt: Literal["markdown", "csv"] = "markdown",
    include_time: bool = True,
) -> str:
    """
    Result table: one column per method, rows error / iteration / time.

    Failed runs show "-" as error and maxit as iteration count.
    """
    if not reports:
        raise InvalidParameterError("emit_table needs at least one report")
    rows = TABLE_ROWS if include_time else TABLE_ROWS[:2]
    cells = [_cells(report) for report in reports]
    labels = [report.label for report in reports]

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["", *labels])
        for row in rows:
            writer.writerow([row, *(cell[row] for cell in cells)])
        return buffer.getvalue()
    if fmt != "markdown":
        raise InvalidParameterError(f"unknown table format {fmt!r}")

    lines = ["| | " + " | ".join(labels) + " |", "|---" * (len(labels) + 1) + "|"]
    for row in rows:
        lines.append(f"| {row} | " + " | ".join(cell[row] for cell in cells) + " |")
    return "\n".join(lines) + "\n"


def parse_table_csv(text: str) -> dict[str, dict[str, Optional[float]]]:
    """Read an emitted CSV table back: label -> row name -> value ("-" -> None)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    labels = header[1:]
    table: dict[str, dict[str, Optional[float]]] = {label: {} for label in labels}
    for row in reader:
        if not row:
            continue
        name, values = row[0], row[1:]
        for label, value in zip(labels, values):
            if value == "-":
                table[label][name] = None
            elif name == "iteration":
                table[label][name] = int(value)
            else:
                table[label][name] = float(value)
    return table


def emit_history(report: SolveReport) -> str:
    """
    CSV of (iteration, relative residual, true relative residual), iteration 0 included.

    The residual column is the solver's own estimate (the preconditioned one
    for BA-GMRES). True residuals are aligned to the last rows: every row
    for BA-GMRES, only the final row for plain GMRES; other cells are empty.
    """
    residuals = report.history.residuals
    true = report.history.true_residuals
    offset = len(residuals) - len(true)
    lines = [HISTORY_HEADER]
    for k, value in enumerate(residuals):
        measured = repr(true[k - offset]) if k >= offset else ""
        lines.append(f"{k},{value!r},{measured}")
    return "\n".join(lines) + "\n"


def write_outputs(
    matrix_name: str,
    reports: list[SolveReport],
    out_dir: str | Path,
    fmt: Literal["markdown", "csv"] = "markdown",
    include_time: bool = True,
) -> list[Path]:
    """Write ``<matrix>-<method>.csv`` histories and the ``<matrix>-table`` file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for report in reports:
        if report.status == "error":
            continue
        path = out / f"{matrix_name}-{report.label}.csv"
        path.write_text(emit_history(report))
        written.append(path)
    table_path = out / f"{matrix_name}-table.{'csv' if fmt == 'csv' else 'md'}"
    table_path.write_text(emit_table(reports, fmt, include_time))
    written.append(table_path)
    logger.info("wrote %d files to %s", len(written), out)
    return written
