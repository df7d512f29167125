"""Per-iteration convergence record shared by every solver."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class ConvergenceHistory:
    """Residuals, errors and inner depths collected while a solver runs.

    ``residuals[k]`` is the relative residual after iteration ``k``
    (index 0 is the initial guess). ``errors`` is filled only when the
    caller supplies the exact solution. ``true_residuals`` is used by
    BA-GMRES, whose ``residuals`` hold the preconditioned estimate.
    """

    residuals: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    true_residuals: list[float] = field(default_factory=list)
    inner_depths: list[int] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)
    wall_time: float = 0.0

    def record(
        self,
        residual: float,
        x: Optional[np.ndarray] = None,
        exact: Optional[np.ndarray] = None,
        keep_iterate: bool = False,
    ) -> None:
        """Append one iteration's residual (and error / iterate if requested)."""
        self.residuals.append(float(residual))
        if exact is not None and x is not None:
            self.errors.append(float(np.linalg.norm(x - exact)))
        if keep_iterate and x is not None:
            self.iterates.append(np.array(x, copy=True))

    @property
    def iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)
