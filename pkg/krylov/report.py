"""Solve configuration and the per-method report."""

from dataclasses import asdict, dataclass, field
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.history import ConvergenceHistory
from core.settings import DEFAULT_ETA, DEFAULT_INNER_MAX, DEFAULT_MAXIT, DEFAULT_TOL

Status = Literal["converged", "failed", "error"]
DepthMode = Literal["fixed", "flexible"]


class SolveConfig(BaseModel):
    """Outer-solve protocol: full (unrestarted) GMRES."""

    model_config = ConfigDict(frozen=True)

    tol: float = Field(DEFAULT_TOL, gt=0.0)
    maxit: int = Field(DEFAULT_MAXIT, ge=1)
    inner_max: int = Field(DEFAULT_INNER_MAX, ge=1)
    eta: float = Field(DEFAULT_ETA, gt=0.0, le=1.0)
    depth_mode: DepthMode = "fixed"
    # Forces the inner depth instead of the residual rule
    inner_depth: Optional[int] = Field(None, ge=1)
    keep_iterates: bool = False


@dataclass
class OperationCounts:
    matvecs: int = 0
    check_matvecs: int = 0
    inner_steps: int = 0
    initial_depth: int = 0
    dots: int = 0
    dot_flops: int = 0


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``error`` is the true relative residual ||b - A x|| / ||b - A x_0||;
    ``residual_estimate`` is the final (preconditioned, for BA-GMRES) Givens
    estimate relative to its starting norm.
    """

    label: str
    x: Optional[np.ndarray] = None
    error: float = float("nan")
    residual_estimate: float = float("nan")
    solution_error: Optional[float] = None
    iterations: int = 0
    wall_time: float = 0.0
    status: Status = "failed"
    message: str = ""
    inner_depths: list[int] = field(default_factory=list)
    depth_mode: Optional[DepthMode] = None
    params: dict[str, Any] = field(default_factory=dict)
    history: ConvergenceHistory = field(default_factory=ConvergenceHistory)
    counts: OperationCounts = field(default_factory=OperationCounts)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @classmethod
    def from_error(cls, label: str, exc: BaseException, params: Optional[dict] = None) -> "SolveReport":
        return cls(label=label, status="error", message=f"{type(exc).__name__}: {exc}", params=params or {})

    def summary(self) -> dict[str, Any]:
        """Plain-data view without vectors or the history."""
        return {
            "label": self.label,
            "status": self.status,
            "message": self.message,
            "error": self.error,
            "residual_estimate": self.residual_estimate,
            "solution_error": self.solution_error,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "inner_depths": list(self.inner_depths),
            "depth_mode": self.depth_mode,
            "params": dict(self.params),
            "counts": asdict(self.counts),
        }
