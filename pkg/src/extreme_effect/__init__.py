"""Extreme effect variables: minimum-|det| decompositions of variant distributions."""

from .binary import BinarySolution, compute_bounds, extreme_coefficients, solve_binary
from .core import (
    Decomposition,
    Distribution,
    MixtureMatrix,
    SourceDistributions,
    Support,
    apply_permutation,
    basis_from_matrix,
    canonicalize,
    decompose,
    is_feasible,
    linear_independence_report,
    reconstruct,
    validate_distribution,
)
from .solver import SolverConfig, SolverResult, solve_extreme, verify_solution

__all__ = [
    "BinarySolution", "compute_bounds", "extreme_coefficients", "solve_binary",
    "Decomposition", "Distribution", "MixtureMatrix", "SourceDistributions", "Support",
    "apply_permutation", "basis_from_matrix", "canonicalize", "decompose", "is_feasible",
    "linear_independence_report", "reconstruct", "validate_distribution",
    "SolverConfig", "SolverResult", "solve_extreme", "verify_solution",
]
__version__ = "0.1.0"
