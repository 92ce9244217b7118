"""Numerical toolkit for sandwiched Renyi entropies and their decomposition inequalities."""

__version__ = "0.1.0"

from .entropies import cond_entropy, renyi_divergence, renyi_entropy
from .linalg import ValidationError
from .mutual import duality_gap, mutual_info
from .orders import OrderTriple, classify_triple, solve_third
from .states import DensityMatrix, random_state

__all__ = [
    "DensityMatrix", "OrderTriple", "ValidationError", "classify_triple", "cond_entropy",
    "duality_gap", "mutual_info", "random_state", "renyi_divergence", "renyi_entropy", "solve_third",
]
