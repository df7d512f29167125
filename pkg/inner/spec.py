"""Named inner methods and their construction."""

import logging
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from core.settings import DEFAULT_ADI_ALPHA
from core.sparse import SparseMatrix
from inner.adi import AdiPreconditioner
from inner.base import (
    ExactPreconditioner,
    InnerPreconditioner,
    JacobiPreconditioner,
    NormalEquationsPreconditioner,
    gram_matrix,
)
from inner.kaczmarz import KaczmarzConfig, KaczmarzPreconditioner
from inner.rpcg import PcgPreconditioner, RpcgPreconditioner

logger = logging.getLogger(__name__)

InnerName = Literal[
    "kaczmarz",
    "kaczmarz-random",
    "kaczmarz-adaptive",
    "kaczmarz-adaptive-random",
    "adi",
    "pcg",
    "rpcg",
    "jacobi",
    "exact",
]


class InnerSpec(BaseModel):
    """Which inner method to run and with what parameters.

    ``alpha`` is the Kaczmarz constant step or the ADI shift, depending on
    ``name``; unused fields are ignored by the other methods.
    """

    model_config = ConfigDict(frozen=True)

    name: InnerName
    alpha: Optional[float] = Field(None, gt=0.0)
    delta: float = Field(0.5, gt=0.0, le=1.0)
    block_size: int = Field(1, ge=1)
    seed: int = 0
    split: Optional[int] = Field(None, ge=1)
    schur_mode: Literal["upper", "diagonal"] = "upper"
    # Run the inner method on A^T A z = A^T v (required for rectangular A)
    normal_equations: bool = False


def make_inner(spec: InnerSpec, A: SparseMatrix) -> InnerPreconditioner:
    """Build the inner preconditioner named by ``spec`` for matrix ``A``."""
    if spec.normal_equations:
        gram = gram_matrix(A)
        inner = make_inner(spec.model_copy(update={"normal_equations": False}), gram)
        logger.debug("running %s on the normal equations of a %d x %d matrix", inner.name, *A.shape)
        return NormalEquationsPreconditioner(A, inner)
    name = spec.name
    if name.startswith("kaczmarz"):
        adaptive = "adaptive" in name
        config = KaczmarzConfig(
            step_mode="adaptive" if adaptive else "constant",
            alpha=1.0 if spec.alpha is None else spec.alpha,
            delta=spec.delta,
            row_selection="randomized" if name.endswith("random") else "cyclic",
            seed=spec.seed,
            block_size=spec.block_size,
        )
        inner: InnerPreconditioner = KaczmarzPreconditioner(A, config)
    elif name == "adi":
        inner = AdiPreconditioner(A, DEFAULT_ADI_ALPHA if spec.alpha is None else spec.alpha)
    elif name == "pcg":
        inner = PcgPreconditioner(A)
    elif name == "rpcg":
        inner = RpcgPreconditioner(A, spec.split, spec.schur_mode)
    elif name == "jacobi":
        inner = JacobiPreconditioner(A)
    else:
        inner = ExactPreconditioner(A)
    logger.debug("built inner %s for a %d x %d matrix", inner.name, *A.shape)
    return inner
