"""Replicator-dynamics integrator used as an empirical stability oracle.

Population states evolve by dx_i/dt = x_i((Bx)_i - x.Bx) under the induced
payoff matrix.  Integration is fixed-step fourth-order Runge-Kutta with
renormalization after every step; trajectories are smooth on the simplex
and the fixed step keeps runs deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ess import best_response_set
from .games import InducedMatrix, SimplexVector, ToleranceSet

__all__ = ["Trajectory", "replicator_field", "replicator_step", "simulate", "local_stability_check"]

CONVERGENCE_DISTANCE = 1e-4


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # one row per time point
    converged: bool
    final_distance: float


def _entries(B) -> np.ndarray:
    return B.entries if isinstance(B, InducedMatrix) else np.asarray(B, dtype=float)


def replicator_field(mat: np.ndarray, w: np.ndarray) -> np.ndarray:
    payoffs = mat @ w
    return w * (payoffs - w @ payoffs)


def _rk4(mat: np.ndarray, w: np.ndarray, dt: float) -> np.ndarray:
    k1 = replicator_field(mat, w)
    k2 = replicator_field(mat, w + 0.5 * dt * k1)
    k3 = replicator_field(mat, w + 0.5 * dt * k2)
    k4 = replicator_field(mat, w + dt * k3)
    out = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = np.maximum(out, 0.0)  # clamp integration round-off
    return out / out.sum()


def replicator_step(B, x: SimplexVector, dt: float) -> SimplexVector:
    """One RK4 step of the replicator dynamics, renormalized."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return SimplexVector(_rk4(_entries(B), x.weights, dt))


def simulate(
    B,
    x0: SimplexVector,
    horizon: float,
    dt: float,
    reference: SimplexVector,
) -> Trajectory:
    """Integrate to the horizon and report distance to the reference point."""
    if horizon <= 0.0 or dt <= 0.0:
        raise ValueError("horizon and dt must be positive")
    mat = _entries(B)
    steps = max(1, int(round(horizon / dt)))
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, x0.dimension))
    w = x0.weights.copy()
    times[0] = 0.0
    states[0] = w
    for k in range(1, steps + 1):
        w = _rk4(mat, w, dt)
        times[k] = k * dt
        states[k] = w
    final_distance = float(np.linalg.norm(w - reference.weights))
    return Trajectory(
        times=times,
        states=states,
        converged=final_distance <= CONVERGENCE_DISTANCE,
        final_distance=final_distance,
    )


def local_stability_check(
    B,
    xstar: SimplexVector,
    perturbation: float = 0.02,
    trials: int = 20,
    seed: int = 0,
    horizon: float = 400.0,
    dt: float = 0.05,
    tol: ToleranceSet | None = None,
) -> bool:
    """Empirical local stability of a rest point.

    Random perturbations of magnitude up to ``perturbation`` are drawn in
    directions toward the best-response face (where mutants can actually
    earn the equilibrium payoff) and integrated; every trial must return to
    within 1e-3 of the rest point.
    """
    tol = tol or ToleranceSet()
    mat = _entries(B)
    w = xstar.weights
    n = w.size
    if n == 1:
        return True
    rng = np.random.default_rng(seed)
    J = np.array(best_response_set(B, xstar, tol))
    for _ in range(trials):
        target = np.zeros(n)
        target[J] = rng.dirichlet(np.ones(J.size))
        direction = target - w
        nrm = float(np.linalg.norm(direction))
        if nrm < 1e-12:
            continue
        size = rng.uniform(0.25, 1.0) * perturbation
        y = np.maximum(w + direction * (size / nrm), 0.0)
        y /= y.sum()
        run = simulate(B, SimplexVector(y), horizon, dt, xstar)
        if float(np.linalg.norm(run.states[-1] - w)) > 1e-3:
            return False
    return True
