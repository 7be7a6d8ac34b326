"""Core types and payoff operations for leader/follower evolutionary games.

A discrete game couples a leader payoff matrix with a follower payoff
tensor: one symmetric population game per leader action.  Everything here
is immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SimplexVector",
    "DiscreteSEG",
    "InducedMatrix",
    "ToleranceSet",
    "Finding",
    "validate_game",
    "induce_matrix",
    "leader_payoff",
    "follower_payoff",
]

# Negative weights above this threshold are treated as solver round-off.
NEG_CLAMP = -1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SimplexVector:
    """Probability vector over pure strategies or phenotypes.

    Construction clamps round-off negatives (>= -1e-12) to zero and
    renormalizes so the weights sum to one within 1e-12.  Larger negative
    entries are rejected instead of masked.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must form a nonempty 1-D vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < NEG_CLAMP):
            raise ValueError(f"weight {w.min():.3e} is below the round-off clamp")
        w = np.maximum(w, 0.0)
        total = w.sum()
        if total <= 0.0:
            raise ValueError("weights must carry positive total mass")
        w /= total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.weights.size

    def support(self, threshold: float) -> np.ndarray:
        """Indices with weight above ``threshold``."""
        return np.flatnonzero(self.weights > threshold)

    @staticmethod
    def pure(index: int, dimension: int) -> "SimplexVector":
        w = np.zeros(dimension)
        w[index] = 1.0
        return SimplexVector(w)

    @staticmethod
    def uniform(dimension: int) -> "SimplexVector":
        return SimplexVector(np.full(dimension, 1.0 / dimension))

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"SimplexVector({np.array2string(self.weights, precision=6)})"


@dataclass(frozen=True, eq=False)
class DiscreteSEG:
    """Discrete Stackelberg evolutionary game.

    ``leader_payoffs`` has shape (m, n).  ``follower_payoffs`` has shape
    (m, n, n) where entry (l, i, j) is the fitness of a phenotype-i
    follower meeting a phenotype-j follower under leader action l.
    """

    leader_payoffs: np.ndarray
    follower_payoffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "leader_payoffs", _frozen_array(self.leader_payoffs))
        object.__setattr__(self, "follower_payoffs", _frozen_array(self.follower_payoffs))

    @property
    def m(self) -> int:
        return self.leader_payoffs.shape[0]

    @property
    def n(self) -> int:
        return self.leader_payoffs.shape[1]


@dataclass(frozen=True, eq=False)
class InducedMatrix:
    """Follower payoff matrix induced by a committed leader mixture."""

    entries: np.ndarray
    source_sigma: SimplexVector

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _frozen_array(self.entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ToleranceSet:
    """Numerical tolerances shared by the equilibrium routines.

    eps_s: minimum support mass, eps_p: payoff tolerance, delta: squared
    distance separating a mutant from the resident, eps_inv: invasion
    certification tolerance.
    """

    eps_s: float = 1e-4
    eps_p: float = 1e-5
    delta: float = 1e-2
    eps_inv: float = 1e-3

    def __post_init__(self) -> None:
        for name in ("eps_s", "eps_p", "delta", "eps_inv"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class Finding:
    """One validation finding; fatal findings make a game unusable."""

    fatal: bool
    message: str


def validate_game(game: DiscreteSEG) -> list[Finding]:
    """Check shapes and entries of a game, returning findings.

    Transpose-asymmetric follower slices are reported as a non-fatal note:
    a slice is the payoff matrix of a symmetric two-player game, which does
    not imply the matrix equals its transpose.
    """
    findings: list[Finding] = []
    lead = game.leader_payoffs
    tensor = game.follower_payoffs
    if lead.ndim != 2:
        findings.append(Finding(True, f"leader payoffs must be 2-D, got ndim={lead.ndim}"))
        return findings
    m, n = lead.shape
    if m < 1 or n < 1:
        findings.append(Finding(True, f"need m >= 1 and n >= 1, got shape {lead.shape}"))
    if tensor.ndim != 3:
        findings.append(Finding(True, f"follower tensor must be 3-D, got ndim={tensor.ndim}"))
        return findings
    if tensor.shape != (m, n, n):
        findings.append(
            Finding(True, f"follower tensor shape {tensor.shape} does not match (m, n, n)=({m}, {n}, {n})")
        )
        return findings
    if not np.all(np.isfinite(lead)):
        findings.append(Finding(True, "leader payoffs contain non-finite entries"))
    if not np.all(np.isfinite(tensor)):
        findings.append(Finding(True, "follower tensor contains non-finite entries"))
    for ell in range(m):
        slice_ = tensor[ell]
        if not np.array_equal(slice_, slice_.T):
            findings.append(
                Finding(False, f"follower slice {ell} is not transpose-symmetric (allowed, noted)")
            )
    return findings


def _require_dimension(name: str, vec: SimplexVector, expected: int) -> None:
    if vec.dimension != expected:
        raise ValueError(f"{name} has dimension {vec.dimension}, expected {expected}")


def induce_matrix(sigma: SimplexVector, game: DiscreteSEG) -> InducedMatrix:
    """Average the follower slices with the leader mixture weights."""
    _require_dimension("sigma", sigma, game.m)
    entries = np.tensordot(sigma.weights, game.follower_payoffs, axes=(0, 0))
    return InducedMatrix(entries=entries, source_sigma=sigma)


def leader_payoff(sigma: SimplexVector, x: SimplexVector, game: DiscreteSEG) -> float:
    """Expected leader utility for mixture ``sigma`` against population ``x``."""
    _require_dimension("sigma", sigma, game.m)
    _require_dimension("x", x, game.n)
    return float(sigma.weights @ game.leader_payoffs @ x.weights)


def follower_payoff(B: InducedMatrix, y: SimplexVector, x: SimplexVector) -> float:
    """Expected fitness of a ``y`` strategist inside a population playing ``x``."""
    _require_dimension("y", y, B.n)
    _require_dimension("x", x, B.n)
    return float(y.weights @ B.entries @ x.weights)
