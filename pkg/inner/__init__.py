"""Inner iterations used as BA-GMRES preconditioners, and as standalone solvers."""

from .adi import AdiOperator, AdiPreconditioner, adi_iteration_matrix, adi_setup, adi_solve, adi_sweep
from .base import (
    ExactPreconditioner,
    InnerPreconditioner,
    JacobiPreconditioner,
    NormalEquationsPreconditioner,
    dense_inner_map,
    gram_matrix,
    select_inner_depth,
)
from .kaczmarz import (
    BlockSample,
    KaczmarzConfig,
    KaczmarzPreconditioner,
    cyclic_blocks,
    kaczmarz_step,
    rabk_solve,
    rabk_step_size,
    rabk_theorem_step,
    rk_solve,
    sample_block,
    sample_row,
    sample_rows,
)
from .rpcg import (
    BlockPartition,
    PcgPreconditioner,
    RpcgFactors,
    RpcgPreconditioner,
    build_factors,
    build_partition,
    dense_cholesky,
    pcg_iterations,
    pcg_solve,
    rpcg_iterations,
    rpcg_solve,
    schur_complement,
    symmetrize_upper,
)
from .spec import InnerSpec, make_inner

__all__ = [
    "AdiOperator",
    "AdiPreconditioner",
    "adi_iteration_matrix",
    "adi_setup",
    "adi_solve",
    "adi_sweep",
    "ExactPreconditioner",
    "InnerPreconditioner",
    "JacobiPreconditioner",
    "NormalEquationsPreconditioner",
    "dense_inner_map",
    "gram_matrix",
    "select_inner_depth",
    "BlockSample",
    "KaczmarzConfig",
    "KaczmarzPreconditioner",
    "cyclic_blocks",
    "kaczmarz_step",
    "rabk_solve",
    "rabk_step_size",
    "rabk_theorem_step",
    "rk_solve",
    "sample_block",
    "sample_row",
    "sample_rows",
    "BlockPartition",
    "PcgPreconditioner",
    "RpcgFactors",
    "RpcgPreconditioner",
    "build_factors",
    "build_partition",
    "dense_cholesky",
    "pcg_iterations",
    "pcg_solve",
    "rpcg_iterations",
    "rpcg_solve",
    "schur_complement",
    "symmetrize_upper",
    "InnerSpec",
    "make_inner",
]
