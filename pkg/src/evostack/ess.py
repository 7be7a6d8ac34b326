"""Nash and invasion-stability analysis for symmetric population games.

The invasion decision maximizes f(y) = y.By - x.By over mutants y on the
simplex that earn within eps_p of the equilibrium payoff against the
resident and sit at squared distance at least delta from it.  The
maximization is exact for this problem class: f is quadratic, the feasible
set is a polytope (simplex cut by the payoff band) minus an open ball, and
every KKT point lives on some face of the polytope, either as a stationary
point of the restricted quadratic or on the mutant-separation sphere.
Faces are enumerated outright (dimensions here are single digits), sphere
candidates come from the secular equation of the restricted quadratic, and
a projected-ascent multistart cross-checks the assembled maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .games import InducedMatrix, SimplexVector, ToleranceSet
from .nlp import simplex_project

__all__ = [
    "EssVerdict",
    "is_symmetric_nash",
    "best_response_set",
    "invasion_maximum",
    "is_ess",
    "invasion_oracle",
    "invasion_grid_slack",
]

NOT_NASH = "NOT_NASH"
DEGENERATE = "DEGENERATE"
NEAR_BOUNDARY = "NEAR_BOUNDARY"
REFINED = "REFINED"


@dataclass(frozen=True, eq=False)
class EssVerdict:
    is_nash: bool
    is_ess: bool
    best_response_set: tuple[int, ...]
    worst_invader: SimplexVector | None
    invasion_value: float
    equilibrium_value: float
    diagnostics: tuple[str, ...] = ()


def _entries(B) -> np.ndarray:
    return B.entries if isinstance(B, InducedMatrix) else np.asarray(B, dtype=float)


def is_symmetric_nash(B, x: SimplexVector, tol: ToleranceSet) -> tuple[bool, float]:
    """Check the symmetric equilibrium conditions; returns (flag, value).

    All rows must earn at most v + eps_p against x and every supported row
    (weight above eps_s) must earn at least v - eps_p.
    """
    mat = _entries(B)
    w = x.weights
    if mat.shape[0] != w.size:
        raise ValueError("dimension mismatch between matrix and strategy")
    payoffs = mat @ w
    v = float(w @ payoffs)
    support = w > tol.eps_s
    ok = bool(np.all(payoffs <= v + tol.eps_p) and np.all(payoffs[support] >= v - tol.eps_p))
    return ok, v


def best_response_set(B, x: SimplexVector, tol: ToleranceSet) -> tuple[int, ...]:
    """Rows earning within eps_p of the equilibrium value against x."""
    mat = _entries(B)
    payoffs = mat @ x.weights
    v = float(x.weights @ payoffs)
    return tuple(int(j) for j in np.flatnonzero(payoffs >= v - tol.eps_p))


def _sphere_kkt_points(A: np.ndarray, g: np.ndarray, radius: float) -> list[np.ndarray]:
    """All KKT points of s.As + g.s on the sphere ||s|| = radius.

    Solves the secular polynomial in the multiplier; eigenvalue clusters
    with vanishing linear coefficient (the hard case) contribute a pair of
    points along the cluster eigenvector.
    """
    k = A.shape[0]
    if k == 0 or radius <= 0.0:
        return []
    lam, V = np.linalg.eigh(A)
    beta = V.T @ (g / 2.0)
    scale = max(1.0, float(np.max(np.abs(lam))), float(np.max(np.abs(beta))) / max(radius, 1e-12))
    points: list[np.ndarray] = []

    # secular polynomial sum_i beta_i^2 prod_{j!=i}(mu-lam_j)^2 = r^2 prod_i (mu-lam_i)^2
    poly = -(radius**2) * np.poly(np.repeat(lam, 2))
    for i in range(k):
        others = np.delete(lam, i)
        poly = np.polyadd(poly, beta[i] ** 2 * np.poly(np.repeat(others, 2)))
    roots = np.roots(poly) if poly.size > 1 else np.array([])
    for mu in roots:
        if abs(mu.imag) > 1e-7 * (1.0 + abs(mu.real)):
            continue
        d = mu.real - lam
        if np.min(np.abs(d)) <= 1e-10 * scale:
            continue  # covered by the hard-case sweep below
        s = V @ (beta / d)
        nrm = float(np.linalg.norm(s))
        if nrm > 0.0:
            points.append(s * (radius / nrm))

    # hard-case families at each eigenvalue cluster
    for lam_c in np.unique(np.round(lam / max(scale, 1e-300), 12)) * max(scale, 1e-300):
        mask = np.abs(lam - lam_c) <= 1e-9 * scale
        if not mask.any() or np.max(np.abs(beta[mask])) > 1e-9 * scale * radius:
            continue
        s_eig = np.zeros(k)
        d = lam_c - lam[~mask]
        if np.min(np.abs(d), initial=np.inf) <= 1e-12 * scale:
            continue
        s_eig[~mask] = beta[~mask] / d
        rest = radius**2 - float(s_eig @ s_eig)
        if rest < 0.0:
            continue
        tau = math.sqrt(rest)
        axis = np.flatnonzero(mask)[0]
        for sign in (1.0, -1.0):
            s_full = s_eig.copy()
            s_full[axis] += sign * tau
            points.append(V @ s_full)
    return points


def invasion_maximum(B, x: SimplexVector, tol: ToleranceSet):
    """Exact maximum of the invasion objective over admissible mutants.

    Returns (value, argmax or None, diagnostics).  The value is -inf when
    the admissible mutant set is empty (for example n = 1, or a strict
    equilibrium whose payoff band admits no separated mutant).
    """
    mat = _entries(B)
    n = x.dimension
    w = x.weights
    c = mat @ w
    v = float(w @ c)
    sym = mat + mat.T
    gv = mat.T @ w  # gradient of x.By in y

    def f_of(y: np.ndarray) -> float:
        return float(y @ mat @ y - w @ mat @ y)

    def feasible(y: np.ndarray) -> np.ndarray | None:
        if np.min(y) < -1e-9:
            return None
        y = np.maximum(y, 0.0)
        total = y.sum()
        if abs(total - 1.0) > 1e-9:
            return None
        y = y / total
        if abs(float(y @ c) - v) > tol.eps_p * (1.0 + 1e-9) + 1e-12:
            return None
        if float(np.sum((y - w) ** 2)) < tol.delta * (1.0 - 1e-12) - 1e-15:
            return None
        return y

    diagnostics: list[str] = []
    best_val = -np.inf
    best_y: np.ndarray | None = None

    def consider(y_raw: np.ndarray) -> None:
        nonlocal best_val, best_y
        y = feasible(y_raw)
        if y is None:
            return
        val = f_of(y)
        if val > best_val:
            best_val, best_y = val, y

    indices = list(range(n))
    for free_size in range(1, n + 1):
        for free in combinations(indices, free_size):
            free_arr = np.array(free)
            for band in (None, -1.0, +1.0):
                rows = [np.ones(free_size)]
                rhs = [1.0]
                if band is not None:
                    rows.append(c[free_arr])
                    rhs.append(v + band * tol.eps_p)
                A_eq = np.vstack(rows)
                b_eq = np.asarray(rhs)
                y0f, *_ = np.linalg.lstsq(A_eq, b_eq, rcond=None)
                if np.max(np.abs(A_eq @ y0f - b_eq)) > 1e-9:
                    continue  # band plane misses this face's affine hull
                _, sv, vh = np.linalg.svd(A_eq)
                rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0] if sv.size else 0.0)))
                Vf = vh[rank:].T  # orthonormal basis of the face's direction space

                def embed(yf: np.ndarray) -> np.ndarray:
                    y = np.zeros(n)
                    y[free_arr] = yf
                    return y

                kdim = Vf.shape[1]
                if kdim == 0:
                    consider(embed(y0f))
                    continue

                S_ff = sym[np.ix_(free_arr, free_arr)]
                g0 = S_ff @ y0f - gv[free_arr]
                H = Vf.T @ S_ff @ Vf
                rhs_z = -(Vf.T @ g0)
                try:
                    z_star = np.linalg.solve(H, rhs_z)
                    consider(embed(y0f + Vf @ z_star))
                except np.linalg.LinAlgError:
                    if DEGENERATE not in diagnostics:
                        diagnostics.append(DEGENERATE)
                    z_star, *_ = np.linalg.lstsq(H, rhs_z, rcond=None)
                    consider(embed(y0f + Vf @ z_star))

                # separation sphere cut through this face
                z_c = Vf.T @ (w[free_arr] - y0f)
                y_c = embed(y0f + Vf @ z_c)
                rho2 = float(np.sum((y_c - w) ** 2))
                r2 = tol.delta - rho2
                if r2 > 1e-15:
                    g_c = Vf.T @ (S_ff @ (y0f + Vf @ z_c) - gv[free_arr])
                    A_s = 0.5 * H
                    for s in _sphere_kkt_points(A_s, g_c, math.sqrt(r2)):
                        consider(embed(y0f + Vf @ (z_c + s)))

    refined = _ascent_refine(mat, w, c, v, tol, best_y)
    for y_raw in refined:
        y = feasible(y_raw)
        if y is None:
            continue
        val = f_of(y)
        if val > best_val + 1e-12:
            best_val, best_y = val, y
            if REFINED not in diagnostics:
                diagnostics.append(REFINED)

    return best_val, best_y, tuple(diagnostics)


def _ascent_refine(mat, w, c, v, tol, seed_point, n_starts=8, iters=120):
    """Projected-ascent cross-check of the face-enumeration maximum."""
    n = w.size
    rng = np.random.default_rng(0)
    c2 = float(c @ c)

    def proj(y):
        for _ in range(4):
            y = simplex_project(y)
            if c2 > 0.0:
                t = float(y @ c) - v
                if t > tol.eps_p:
                    y = y - ((t - tol.eps_p) / c2) * c
                elif t < -tol.eps_p:
                    y = y - ((t + tol.eps_p) / c2) * c
        return simplex_project(y)

    starts = [rng.dirichlet(np.ones(n)) for _ in range(n_starts)]
    if seed_point is not None:
        starts.append(seed_point.copy())
    out = []
    sym = mat + mat.T
    for y in starts:
        y = proj(y)
        step = 0.1
        for _ in range(iters):
            grad = sym @ y - mat.T @ w
            y_new = proj(y + step * grad)
            f_new = float(y_new @ mat @ y_new - w @ mat @ y_new)
            f_old = float(y @ mat @ y - w @ mat @ y)
            if f_new > f_old + 1e-15:
                y = y_new
            else:
                step *= 0.5
                if step < 1e-8:
                    break
        # push off the resident if the ascent collapsed inside the ball
        d2 = float(np.sum((y - w) ** 2))
        if d2 < tol.delta:
            direction = y - w
            nrm = math.sqrt(d2)
            if nrm < 1e-14:
                direction = rng.normal(size=n)
                direction -= direction.mean()
                nrm = float(np.linalg.norm(direction)) or 1.0
            y = proj(w + direction / nrm * math.sqrt(tol.delta) * 1.0000001)
        out.append(y)
    return out


def is_ess(B, x: SimplexVector, tol: ToleranceSet) -> EssVerdict:
    """Decide evolutionary stability of x in the induced game.

    Short-circuits to a NOT_NASH verdict when the equilibrium conditions
    fail.  Otherwise the invasion maximum decides: strictly negative means
    stable; values inside [0, 2*eps_p] are rejected conservatively and
    tagged NEAR_BOUNDARY; anything larger is a clear invasion.
    """
    nash, v = is_symmetric_nash(B, x, tol)
    J = best_response_set(B, x, tol)
    if not nash:
        return EssVerdict(
            is_nash=False,
            is_ess=False,
            best_response_set=J,
            worst_invader=None,
            invasion_value=np.inf,
            equilibrium_value=v,
            diagnostics=(NOT_NASH,),
        )
    val, y, diags = invasion_maximum(B, x, tol)
    diags = list(diags)
    if val == -np.inf:
        ess = True
    elif val < 0.0:
        ess = True
    elif val <= 2.0 * tol.eps_p:
        ess = False
        diags.append(NEAR_BOUNDARY)
    else:
        ess = False
    return EssVerdict(
        is_nash=True,
        is_ess=ess,
        best_response_set=J,
        worst_invader=SimplexVector(y) if y is not None else None,
        invasion_value=float(val),
        equilibrium_value=v,
        diagnostics=tuple(diags),
    )


def _simplex_lattice(n: int, resolution: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0]])
    counts = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            counts.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], resolution, n)
    return np.asarray(counts, dtype=float) / resolution


def invasion_oracle(
    B,
    x: SimplexVector,
    grid_resolution: int,
    tol: ToleranceSet,
    budget: int = 10_000_000,
) -> float:
    """Grid-enumeration counterpart of invasion_maximum.

    Enumerates the full simplex lattice at the given resolution, filters it
    by the payoff band and separation constraints, and returns the largest
    invasion objective (-inf when no lattice mutant is admissible).
    """
    mat = _entries(B)
    n = x.dimension
    count = math.comb(grid_resolution + n - 1, n - 1)
    if count > budget:
        raise ValueError(f"grid of {count} points exceeds budget {budget}")
    Y = _simplex_lattice(n, grid_resolution)
    w = x.weights
    c = mat @ w
    v = float(w @ c)
    band = np.abs(Y @ c - v) <= tol.eps_p
    sep = np.sum((Y - w) ** 2, axis=1) >= tol.delta
    keep = band & sep
    if not keep.any():
        return -np.inf
    Yk = Y[keep]
    vals = np.einsum("ti,ij,tj->t", Yk, mat, Yk) - Yk @ (mat.T @ w)
    return float(vals.max())


def invasion_grid_slack(B, x: SimplexVector, grid_resolution: int) -> float:
    """Lipschitz slack L / resolution for the grid oracle.

    L bounds the gradient norm of the invasion objective over the simplex;
    the bound is attained at a vertex because the norm is convex.
    """
    mat = _entries(B)
    sym = mat + mat.T
    gv = mat.T @ x.weights
    L = max(float(np.linalg.norm(sym[:, j] - gv)) for j in range(mat.shape[0]))
    return L / grid_resolution
