"""Lower-bound constructions: K_n, Toeplitz recovery numbers, the lower-bound tree, retrorse blocks."""

from .kvec import k_vector
from .retrorse import RetrorseFraction, RetrorseResult, i_value, is_retrorse, retrorse_fraction
from .toeplitz import (
    FractionResult,
    ToeplitzSystem,
    build_toeplitz,
    interval_contributions,
    nonsingular_fraction,
    recovery_number,
    recovery_number_bruteforce,
    singular_fraction,
    toeplitz_from_diagonals,
    toeplitz_nonsingular,
)
from .tree import LowerBoundTerms, LowerBoundTree, TreeNode, build_tree, lower_bound_terms, lower_bound_value

__all__ = [
    "FractionResult",
    "LowerBoundTerms",
    "LowerBoundTree",
    "RetrorseFraction",
    "RetrorseResult",
    "ToeplitzSystem",
    "TreeNode",
    "build_toeplitz",
    "build_tree",
    "i_value",
    "interval_contributions",
    "is_retrorse",
    "k_vector",
    "lower_bound_terms",
    "lower_bound_value",
    "nonsingular_fraction",
    "recovery_number",
    "recovery_number_bruteforce",
    "retrorse_fraction",
    "singular_fraction",
    "toeplitz_from_diagonals",
    "toeplitz_nonsingular",
]
