"""Multistart solver for smooth objectives under box, simplex, and
equality/inequality constraints.

The solver is an augmented-Lagrangian outer loop around spectral projected
gradient (Barzilai-Borwein step, nonmonotone Armijo line search) inner
iterations.  The projection handles boxes and designated simplex blocks
exactly.  Results are candidates, not certified global optima: global
claims are the job of the problem-specific certification routines that sit
on top of this module.

Complementarity constraints must never be passed in directly; callers
enumerate activity patterns and pass the resulting smooth subproblems.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Constraint",
    "SmoothProblem",
    "SolveReport",
    "InfeasibleError",
    "NonconvergedError",
    "simplex_project",
    "minimize",
    "check_gradient",
]


class InfeasibleError(RuntimeError):
    """No start reached the requested feasibility tolerance."""


class NonconvergedError(RuntimeError):
    """Every start exhausted its iteration budget before converging."""


class Constraint(NamedTuple):
    """Scalar constraint with analytic gradient.

    Equality constraints target 0, inequality constraints target <= 0.
    """

    fun: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SmoothProblem:
    dimension: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    equality_constraints: tuple[Constraint, ...] = ()
    inequality_constraints: tuple[Constraint, ...] = ()
    box_lower: np.ndarray | None = None
    box_upper: np.ndarray | None = None
    simplex_blocks: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        lower = np.full(self.dimension, -np.inf) if self.box_lower is None else np.asarray(self.box_lower, float)
        upper = np.full(self.dimension, np.inf) if self.box_upper is None else np.asarray(self.box_upper, float)
        if lower.shape != (self.dimension,) or upper.shape != (self.dimension,):
            raise ValueError("box bounds must match the problem dimension")
        if np.any(lower > upper):
            raise ValueError("box_lower must not exceed box_upper")
        covered: set[int] = set()
        for a, b in self.simplex_blocks:
            if not (0 <= a < b <= self.dimension):
                raise ValueError(f"invalid simplex block ({a}, {b})")
            block = set(range(a, b))
            if covered & block:
                raise ValueError("simplex blocks must be disjoint")
            covered |= block
        object.__setattr__(self, "box_lower", lower)
        object.__setattr__(self, "box_upper", upper)


@dataclass
class SolveReport:
    best_point: np.ndarray
    best_value: float
    feasibility_residual: float
    starts_used: int
    converged_starts: int
    wall_time: float
    seed: int
    incumbent_residuals: tuple[float, ...] = field(default=(), compare=False, repr=False)


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (Michelot's method)."""
    v = np.asarray(v, dtype=float)
    active = np.ones(v.size, dtype=bool)
    for _ in range(v.size + 1):
        tau = (v[active].sum() - 1.0) / active.sum()
        keep = active & (v > tau)
        if not keep.any():  # all mass on the largest coordinate
            keep = np.zeros_like(active)
            keep[np.argmax(v)] = True
        if np.array_equal(keep, active):
            break
        active = keep
    return np.maximum(v - tau, 0.0)


def _project(problem: SmoothProblem, z: np.ndarray) -> np.ndarray:
    w = np.clip(z, problem.box_lower, problem.box_upper)
    for a, b in problem.simplex_blocks:
        w[a:b] = simplex_project(z[a:b])
    return w


def feasibility_residual(problem: SmoothProblem, x: np.ndarray) -> float:
    res = 0.0
    for con in problem.equality_constraints:
        res = max(res, abs(con.fun(x)))
    for con in problem.inequality_constraints:
        res = max(res, max(0.0, con.fun(x)))
    res = max(res, float(np.max(problem.box_lower - x, initial=0.0)))
    res = max(res, float(np.max(x - problem.box_upper, initial=0.0)))
    for a, b in problem.simplex_blocks:
        res = max(res, abs(x[a:b].sum() - 1.0), float(max(0.0, -x[a:b].min())))
    return res


def _spg(fun_grad, project, x0, tol, max_iter, memory=10):
    """Spectral projected gradient descent; returns (x, crit, iters, converged)."""
    x = project(np.asarray(x0, dtype=float).copy())
    f, g = fun_grad(x)
    recent = [f]
    alpha = 1.0 / max(1.0, float(np.max(np.abs(g))))
    crit = float(np.max(np.abs(project(x - g) - x)))
    it = 0
    while crit > tol and it < max_iter:
        d = project(x - alpha * g) - x
        slope = float(g @ d)
        if slope > -1e-18:
            break
        fmax = max(recent)
        lam = 1.0
        while True:
            x_new = x + lam * d
            f_new, g_new = fun_grad(x_new)
            if f_new <= fmax + 1e-4 * lam * slope or lam < 1e-13:
                break
            lam *= 0.5
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        alpha = float(s @ s) / sy if sy > 1e-18 else min(alpha * 10.0, 1e8)
        alpha = min(max(alpha, 1e-10), 1e10)
        x, f, g = x_new, f_new, g_new
        recent.append(f)
        if len(recent) > memory:
            recent.pop(0)
        crit = float(np.max(np.abs(project(x - g) - x)))
        it += 1
    return x, crit, it, crit <= tol


def _augmented(problem: SmoothProblem, lam: np.ndarray, mu: np.ndarray, rho: float):
    eqs = problem.equality_constraints
    ineqs = problem.inequality_constraints

    def fun_grad(x: np.ndarray):
        val = problem.objective(x)
        grad = problem.gradient(x).astype(float, copy=True)
        for i, con in enumerate(eqs):
            ci = con.fun(x)
            val += -lam[i] * ci + 0.5 * rho * ci * ci
            grad += (-lam[i] + rho * ci) * con.grad(x)
        for j, con in enumerate(ineqs):
            gj = con.fun(x)
            t = mu[j] + rho * gj
            if t > 0.0:
                val += (t * t - mu[j] * mu[j]) / (2.0 * rho)
                grad += t * con.grad(x)
            else:
                val -= mu[j] * mu[j] / (2.0 * rho)
        return val, grad

    return fun_grad


def _single_start(problem, x0, feas_tol, opt_tol, inner_cap):
    """Augmented-Lagrangian loop from one start; yields per-outer candidates."""
    n_eq = len(problem.equality_constraints)
    n_in = len(problem.inequality_constraints)
    lam = np.zeros(n_eq)
    mu = np.zeros(n_in)
    rho = 10.0
    x = np.asarray(x0, dtype=float).copy()
    inner_tol = max(opt_tol, 1e-4)
    prev_viol = np.inf
    converged = False
    candidates = []
    for _ in range(30):
        x, crit, _, _ = _spg(_augmented(problem, lam, mu, rho), lambda z: _project(problem, z), x, inner_tol, inner_cap)
        viol = feasibility_residual(problem, x)
        candidates.append((x.copy(), problem.objective(x), viol))
        if viol <= feas_tol and crit <= opt_tol and inner_tol <= opt_tol * 1.0001:
            converged = True
            break
        c_vals = np.array([con.fun(x) for con in problem.equality_constraints])
        g_vals = np.array([con.fun(x) for con in problem.inequality_constraints])
        if viol <= max(feas_tol, 0.25 * prev_viol):
            lam = lam - rho * c_vals if n_eq else lam
            mu = np.maximum(0.0, mu + rho * g_vals) if n_in else mu
        else:
            rho = min(rho * 10.0, 1e10)
        np.clip(lam, -1e12, 1e12, out=lam)
        np.clip(mu, 0.0, 1e12, out=mu)
        prev_viol = min(prev_viol, viol)
        inner_tol = max(opt_tol, inner_tol * 0.2)
    return candidates, converged


def _deterministic_starts(problem: SmoothProblem) -> list[np.ndarray]:
    lower = np.where(np.isfinite(problem.box_lower), problem.box_lower, -10.0)
    upper = np.where(np.isfinite(problem.box_upper), problem.box_upper, 10.0)
    center = 0.5 * (lower + upper)
    for a, b in problem.simplex_blocks:
        center[a:b] = 1.0 / (b - a)
    starts = [center]
    for a, b in problem.simplex_blocks:
        for k in range(a, b):
            pt = center.copy()
            pt[a:b] = 0.0
            pt[k] = 1.0
            starts.append(pt)
        if b - a == 2:  # fine sweep along a one-parameter leader line
            for t in np.linspace(0.0, 1.0, 33):
                pt = center.copy()
                pt[a], pt[a + 1] = t, 1.0 - t
                starts.append(pt)
    return starts


def _random_start(problem: SmoothProblem, rng: np.random.Generator) -> np.ndarray:
    lower = np.where(np.isfinite(problem.box_lower), problem.box_lower, -10.0)
    upper = np.where(np.isfinite(problem.box_upper), problem.box_upper, 10.0)
    pt = rng.uniform(lower, upper)
    for a, b in problem.simplex_blocks:
        pt[a:b] = rng.dirichlet(np.ones(b - a))
    return pt


def minimize(
    problem: SmoothProblem,
    starts: int = 64,
    seed: int = 0,
    feas_tol: float = 1e-8,
    opt_tol: float = 1e-8,
    inner_cap: int = 5000,
) -> SolveReport:
    """Run the multistart augmented-Lagrangian solve.

    Starts are deterministic given ``seed``; the reduction keeps the best
    feasible value, ties broken by start order.  Raises ``InfeasibleError``
    if no start reaches ``feas_tol`` and ``NonconvergedError`` if no start
    converges within its budgets.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    if feas_tol <= 0 or opt_tol <= 0:
        raise ValueError("tolerances must be positive")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    points = _deterministic_starts(problem)
    points += [_random_start(problem, rng) for _ in range(starts)]

    best = None  # (value, start_idx, point, viol)
    converged_starts = 0
    trace: list[float] = []
    for idx, x0 in enumerate(points):
        candidates, converged = _single_start(problem, x0, feas_tol, opt_tol, inner_cap)
        converged_starts += int(converged)
        for x, val, viol in candidates:
            if viol > feas_tol:
                continue
            if best is None or val < best[0]:
                best = (val, idx, x, viol)
            trace.append(min(trace[-1], best[3]) if trace else best[3])
    wall = time.perf_counter() - t0
    if best is None:
        raise InfeasibleError("no start reached the feasibility tolerance")
    if converged_starts == 0:
        raise NonconvergedError("iteration budgets exhausted at every start")
    value, _, point, _ = best
    return SolveReport(
        best_point=point,
        best_value=float(value),
        feasibility_residual=feasibility_residual(problem, point),
        starts_used=len(points),
        converged_starts=converged_starts,
        wall_time=wall,
        seed=seed,
        incumbent_residuals=tuple(trace),
    )


def check_gradient(problem: SmoothProblem, point: np.ndarray, h: float = 1e-6) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Covers the objective and every constraint; the relative error divides
    by max(1, |analytic component|).
    """
    point = np.asarray(point, dtype=float)
    pairs = [(problem.objective, problem.gradient)]
    pairs += [(c.fun, c.grad) for c in problem.equality_constraints]
    pairs += [(c.fun, c.grad) for c in problem.inequality_constraints]
    worst = 0.0
    for fun, grad in pairs:
        analytic = np.asarray(grad(point), dtype=float)
        for k in range(problem.dimension):
            step = np.zeros_like(point)
            step[k] = h
            fd = (fun(point + step) - fun(point - step)) / (2.0 * h)
            err = abs(fd - analytic[k]) / max(1.0, abs(analytic[k]))
            worst = max(worst, err)
    return worst
