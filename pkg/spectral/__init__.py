"""Desk-scale spectral oracle."""

from .oracle import (
    SpectralSummary,
    build_W,
    condition_2,
    dense_eigenvalues,
    is_semi_convergent,
    lambda_max_block,
    lambda_max_block_bound,
    min_nonzero_eig_gram,
    powers_converge,
    spectral_condition,
    spectral_radius,
    spectral_summary,
)

__all__ = [
    "SpectralSummary",
    "build_W",
    "condition_2",
    "dense_eigenvalues",
    "is_semi_convergent",
    "lambda_max_block",
    "lambda_max_block_bound",
    "min_nonzero_eig_gram",
    "powers_converge",
    "spectral_condition",
    "spectral_radius",
    "spectral_summary",
]
