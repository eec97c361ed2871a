"""Degree-weighted random trees: growth, Malthusian analytics, entropy and dimension estimators."""

from .malthus import (
    DEFAULT_TOL,
    MalthusReport,
    WeightFunction,
    entropy_closed_form,
    hausdorff_dimension,
    malthus_report,
    rho_hat,
    rho_hat_prime,
    solve_malthusian,
)
from .growth import (
    SeedSpec,
    TreeRealization,
    check_invariants,
    complete_tree,
    grow_continuous,
    grow_discrete,
    grow_recursive_construction,
    subtree_sizes,
    total_weight,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL", "MalthusReport", "WeightFunction", "entropy_closed_form", "hausdorff_dimension",
    "malthus_report", "rho_hat", "rho_hat_prime", "solve_malthusian",
    "SeedSpec", "TreeRealization", "check_invariants", "complete_tree", "grow_continuous",
    "grow_discrete", "grow_recursive_construction", "subtree_sizes", "total_weight",
]
