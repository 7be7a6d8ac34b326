"""Support enumeration, per-support leader optimization, and stability
filtering for discrete leader/follower games.

Each follower support is handled by a leader-space reduction: for a fixed
leader mixture the indifference conditions on the support plus
normalization form a square linear system in the follower weights and the
equilibrium value, so the leader objective becomes a smooth function of
the mixture alone (gradients by implicit differentiation of the system).
The reduction is exact wherever the system is nonsingular.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import nlp
from .ess import EssVerdict, is_ess, is_symmetric_nash
from .games import DiscreteSEG, SimplexVector, ToleranceSet, induce_matrix, leader_payoff

__all__ = [
    "SupportSolveResult",
    "SessRecord",
    "SupportDiagnostic",
    "OsessResult",
    "enumerate_supports",
    "solve_se_support",
    "compute_discrete_osess",
    "verify_stackelberg_consistency",
]

FEASIBLE = "FEASIBLE"
INFEASIBLE = "INFEASIBLE"
DEGENERATE = "DEGENERATE"

# Margin used when a support is re-solved after its leader-optimal point
# fails the stability check only through payoff-band mutants: backing the
# off-support rows away from the equilibrium value by this amount closes
# the boundary layer while moving the leader value by at most its slope
# times the margin.
RETRY_MARGIN = 1e-4


@dataclass(frozen=True, eq=False)
class SupportSolveResult:
    status: str
    sigma: SimplexVector | None
    x: SimplexVector | None
    follower_value: float
    leader_value: float


@dataclass(frozen=True, eq=False)
class SessRecord:
    support: tuple[int, ...]
    sigma: SimplexVector
    x: SimplexVector
    leader_value: float
    verdict: EssVerdict


@dataclass(frozen=True, eq=False)
class SupportDiagnostic:
    support: tuple[int, ...]
    status: str
    is_stable: bool | None
    leader_value: float | None
    retried: bool = False


@dataclass(frozen=True, eq=False)
class OsessResult:
    best: SessRecord | None
    all_sess: tuple[SessRecord, ...]
    supports_searched: int
    diagnostics: tuple[SupportDiagnostic, ...]


def enumerate_supports(n: int) -> list[tuple[int, ...]]:
    """All nonempty supports, ordered by size then lexicographically."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 20:
        raise ValueError("support enumeration refused for n > 20")
    out: list[tuple[int, ...]] = []
    for size in range(1, n + 1):
        out.extend(combinations(range(n), size))
    return out


class _SupportSystem:
    """Per-sigma inner linear solve with implicit differentiation, cached."""

    def __init__(self, game: DiscreteSEG, T: tuple[int, ...]):
        self.T = np.asarray(T, dtype=int)
        self.off = np.setdiff1d(np.arange(game.n), self.T)
        self.F_TT = game.follower_payoffs[:, self.T[:, None], self.T[None, :]]  # (m, t, t)
        self.F_offT = game.follower_payoffs[:, self.off[:, None], self.T[None, :]]  # (m, o, t)
        self.lead_T = game.leader_payoffs[:, self.T]  # (m, t)
        self.m = game.m
        self.t = len(T)
        self._key: bytes | None = None
        self._state: tuple | None = None

    def state(self, sigma: np.ndarray):
        key = sigma.tobytes()
        if key == self._key:
            return self._state
        t, m = self.t, self.m
        M = np.zeros((t + 1, t + 1))
        M[:t, :t] = np.tensordot(sigma, self.F_TT, axes=(0, 0))
        M[:t, t] = -1.0
        M[t, :t] = 1.0
        rhs = np.zeros(t + 1)
        rhs[t] = 1.0
        try:
            Minv = np.linalg.inv(M)
            singular = not np.all(np.isfinite(Minv)) or np.linalg.cond(M) > 1e12
        except np.linalg.LinAlgError:
            Minv, singular = None, True
        if singular:
            self._key, self._state = key, (None, None, None, True)
            return self._state
        xi = Minv @ rhs  # (x_T, v)
        # d(xi)/d(sigma_l) = -Minv dM_l xi; dM_l only touches the payoff block
        dxi = np.empty((m, t + 1))
        for ell in range(m):
            dM_xi = np.zeros(t + 1)
            dM_xi[:t] = self.F_TT[ell] @ xi[:t]
            dxi[ell] = -Minv @ dM_xi
        self._key, self._state = key, (xi, dxi, Minv, False)
        return self._state


def _support_problem(
    game: DiscreteSEG,
    T: tuple[int, ...],
    tol: ToleranceSet,
    off_margin: float,
) -> tuple[nlp.SmoothProblem, _SupportSystem]:
    sys_ = _SupportSystem(game, T)
    m, t = sys_.m, sys_.t
    BAD = 1e6

    def objective(sigma):
        xi, _, _, singular = sys_.state(sigma)
        if singular:
            return BAD
        return -float(sigma @ sys_.lead_T @ xi[:t])

    def gradient(sigma):
        xi, dxi, _, singular = sys_.state(sigma)
        if singular:
            return np.zeros(m)
        base = sys_.lead_T @ xi[:t]
        corr = np.array([sigma @ sys_.lead_T @ dxi[ell, :t] for ell in range(m)])
        return -(base + corr)

    def support_mass_constraint(i):
        def fun(sigma):
            xi, _, _, singular = sys_.state(sigma)
            return BAD if singular else float(tol.eps_s - xi[i])

        def grad(sigma):
            xi, dxi, _, singular = sys_.state(sigma)
            return np.zeros(m) if singular else -dxi[:, i]

        return nlp.Constraint(fun, grad)

    def off_support_constraint(row):
        def fun(sigma):
            xi, _, _, singular = sys_.state(sigma)
            if singular:
                return BAD
            val = float(sigma @ (sys_.F_offT[:, row, :] @ xi[:t]))
            return val - xi[t] + off_margin

        def grad(sigma):
            xi, dxi, _, singular = sys_.state(sigma)
            if singular:
                return np.zeros(m)
            base = sys_.F_offT[:, row, :] @ xi[:t]
            corr = np.array(
                [sigma @ (sys_.F_offT[:, row, :] @ dxi[ell, :t]) for ell in range(m)]
            )
            return base + corr - dxi[:, t]

        return nlp.Constraint(fun, grad)

    ineqs = [support_mass_constraint(i) for i in range(t)]
    ineqs += [off_support_constraint(r) for r in range(len(sys_.off))]
    problem = nlp.SmoothProblem(
        dimension=m,
        objective=objective,
        gradient=gradient,
        inequality_constraints=tuple(ineqs),
        box_lower=np.zeros(m),
        box_upper=np.ones(m),
        simplex_blocks=((0, m),),
    )
    return problem, sys_


def _degeneracy_fraction(sys_: _SupportSystem, seed: int, samples: int = 32) -> float:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD5A1]).generate_state(1)[0])
    singular = 0
    for _ in range(samples):
        sigma = rng.dirichlet(np.ones(sys_.m))
        _, _, _, bad = sys_.state(sigma)
        singular += int(bad)
    return singular / samples


def solve_se_support(
    game: DiscreteSEG,
    T: tuple[int, ...],
    tol: ToleranceSet,
    starts: int = 64,
    seed: int = 0,
    off_margin: float = 0.0,
) -> SupportSolveResult:
    """Leader-optimal point with follower play restricted to support T.

    The follower weights must carry at least eps_s on T, vanish off T,
    be indifferent across T, and dominate every off-support row.
    """
    if len(T) == 0:
        raise ValueError("support must be nonempty")
    problem, sys_ = _support_problem(game, T, tol, off_margin)
    if _degeneracy_fraction(sys_, seed) >= 0.5:
        return SupportSolveResult(DEGENERATE, None, None, np.nan, np.nan)
    try:
        report = nlp.minimize(problem, starts=starts, seed=seed)
    except (nlp.InfeasibleError, nlp.NonconvergedError):
        return SupportSolveResult(INFEASIBLE, None, None, np.nan, np.nan)
    sigma_w = report.best_point
    xi, _, _, singular = sys_.state(sigma_w)
    if singular:
        return SupportSolveResult(INFEASIBLE, None, None, np.nan, np.nan)
    x_full = np.zeros(game.n)
    x_full[sys_.T] = np.maximum(xi[: sys_.t], 0.0)
    if abs(x_full.sum() - 1.0) > 1e-6 or np.min(xi[: sys_.t]) < tol.eps_s - 1e-6:
        return SupportSolveResult(INFEASIBLE, None, None, np.nan, np.nan)
    sigma = SimplexVector(sigma_w)
    x = SimplexVector(x_full)
    return SupportSolveResult(
        status=FEASIBLE,
        sigma=sigma,
        x=x,
        follower_value=float(xi[sys_.t]),
        leader_value=leader_payoff(sigma, x, game),
    )


def _off_support_band_active(game, result, T, tol) -> bool:
    B = induce_matrix(result.sigma, game)
    payoffs = B.entries @ result.x.weights
    off = np.setdiff1d(np.arange(game.n), np.asarray(T))
    if off.size == 0:
        return False
    return bool(np.max(payoffs[off]) >= result.follower_value - 2.0 * tol.eps_p)


def compute_discrete_osess(
    game: DiscreteSEG,
    tol: ToleranceSet | None = None,
    starts: int = 64,
    seed: int = 0,
    mode: str = "osess",
) -> OsessResult:
    """Enumerate supports, solve each, and keep stability-certified points.

    ``mode`` selects among "osess" (best leader value, the default),
    "first" (stop at the first certified point), and "all" (identical
    search to "osess"; every certified point is always reported).
    A support whose leader-optimal point is invadable only through
    payoff-band mutants is re-solved once with the off-support rows backed
    off by a small margin; the stability region is open at indifference
    boundaries and the optimum may sit on that boundary.
    """
    if mode not in ("osess", "first", "all"):
        raise ValueError(f"unknown mode {mode!r}")
    tol = tol or ToleranceSet()
    supports = enumerate_supports(game.n)
    sub_seeds = np.random.SeedSequence(seed).generate_state(2 * len(supports), dtype=np.uint32)
    best: SessRecord | None = None
    all_sess: list[SessRecord] = []
    diagnostics: list[SupportDiagnostic] = []
    searched = 0
    for idx, T in enumerate(supports):
        searched += 1
        result = solve_se_support(game, T, tol, starts=starts, seed=int(sub_seeds[2 * idx]))
        retried = False
        record: SessRecord | None = None
        if result.status == FEASIBLE:
            verdict = is_ess(induce_matrix(result.sigma, game), result.x, tol)
            if not verdict.is_ess and _off_support_band_active(game, result, T, tol):
                retry = solve_se_support(
                    game,
                    T,
                    tol,
                    starts=starts,
                    seed=int(sub_seeds[2 * idx + 1]),
                    off_margin=RETRY_MARGIN,
                )
                retried = True
                if retry.status == FEASIBLE:
                    retry_verdict = is_ess(induce_matrix(retry.sigma, game), retry.x, tol)
                    if retry_verdict.is_ess:
                        result, verdict = retry, retry_verdict
            if verdict.is_ess:
                record = SessRecord(
                    support=tuple(T),
                    sigma=result.sigma,
                    x=result.x,
                    leader_value=result.leader_value,
                    verdict=verdict,
                )
            diagnostics.append(
                SupportDiagnostic(tuple(T), result.status, verdict.is_ess, result.leader_value, retried)
            )
        else:
            diagnostics.append(SupportDiagnostic(tuple(T), result.status, None, None, retried))
        if record is not None:
            all_sess.append(record)
            if best is None or record.leader_value > best.leader_value:
                best = record
            if mode == "first":
                break
    return OsessResult(
        best=best,
        all_sess=tuple(all_sess),
        supports_searched=searched,
        diagnostics=tuple(diagnostics),
    )


def verify_stackelberg_consistency(
    game: DiscreteSEG,
    sigma: SimplexVector,
    x: SimplexVector,
    tol: ToleranceSet | None = None,
) -> bool:
    """Follower-side consistency: x must be a symmetric equilibrium of the
    game induced by sigma."""
    tol = tol or ToleranceSet()
    ok, _ = is_symmetric_nash(induce_matrix(sigma, game), x, tol)
    return ok
