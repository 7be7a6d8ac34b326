"""Solvers for evolutionarily stable Stackelberg equilibria."""

from .games import (
    DiscreteSEG,
    Finding,
    InducedMatrix,
    SimplexVector,
    ToleranceSet,
    follower_payoff,
    induce_matrix,
    leader_payoff,
    validate_game,
)

__version__ = "0.1.0"

__all__ = [
    "DiscreteSEG",
    "Finding",
    "InducedMatrix",
    "SimplexVector",
    "ToleranceSet",
    "follower_payoff",
    "induce_matrix",
    "leader_payoff",
    "validate_game",
    "__version__",
]
