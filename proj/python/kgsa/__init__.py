"""Kernel-based global sensitivity analysis."""

from ._core import (
    KgsaError,
    gram,
    hsic_indices,
    ishigami,
    ishigami_sobol_exact,
    mmd_indices,
    run_cli,
    shapley,
    verify_zero_mean,
)

__all__ = [
    "KgsaError",
    "gram",
    "hsic_indices",
    "ishigami",
    "ishigami_sobol_exact",
    "mmd_indices",
    "run_cli",
    "shapley",
    "verify_zero_mean",
]
