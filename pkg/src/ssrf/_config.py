"""Numerical tolerances used across the package, kept in one place."""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    constant_variance: float = 1e-12
    degenerate_regressor: float = 1e-12
    rank_deficient: float = 1e-10
    symmetry: float = 1e-10
    jacobi_offdiag: float = 1e-12
    jacobi_max_sweeps: int = 100
    numerical_rank: float = 1e-12
    cd_coef_change: float = 1e-9
    cd_max_sweeps: int = 10_000
    nonzero_coef: float = 1e-8


TOL = Tolerances()
