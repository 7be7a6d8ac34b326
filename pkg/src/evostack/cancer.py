"""Eco-evolutionary treatment game: model functions, candidate generation,
and ex-post global certification.

Three cell phenotypes compete under two drugs.  Phenotype 0 carries no
resistance trait; phenotypes 1 and 2 carry traits in [0, 1] that blunt the
matching drug at an exponential growth cost.  The physician maximizes a
quality-of-life objective over doses while the tumor sits at an
eco-evolutionary rest point.

The solvers enumerate the finitely many activity patterns: which
phenotypes are alive, and whether each trait sits at 0, at 1, or at an
interior stationary point.  Every pattern yields a square nonlinear system
in the scaled abundances and active traits, solved by damped Newton inside
a two-dimensional dose optimization whose gradients come from implicit
differentiation of that system.  Candidates are then certified by global
one-dimensional maximization of every mutant fitness (dense grid plus
local polish), which is what turns a stationary point into a defensible
answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple

import numpy as np

from . import nlp
from .games import ToleranceSet

__all__ = [
    "CancerModelParams",
    "EcoEvoState",
    "CertifyResult",
    "CandidateSolution",
    "ContinuousSolution",
    "NoCandidateError",
    "fitness_G",
    "fitness_grad_u",
    "quality_Q",
    "ecological_residual",
    "certify",
    "gen_osess",
    "compute_se_continuous",
    "compute_continuous_osess",
]

TRAITED = (1, 2)
ACTIVITIES = ("lo", "int", "hi")
CERTIFY_GRID = 10_001
ARGMAX_VALUE_TOL = 1e-6  # resident must match the global fitness peak this closely
XI_MAX = 2.0  # abundance cap in carrying-capacity units
BAD_VALUE = 1e6


class NoCandidateError(RuntimeError):
    """Every activity-pattern subproblem came back infeasible."""


@dataclass(frozen=True)
class CancerModelParams:
    """Model constants; defaults are the baseline experimental calibration."""

    r_max: float = 0.45
    g1: float = 0.5
    g2: float = 0.5
    a0: float = 1.0
    a1: float = 0.15
    a2: float = 0.9
    a3: float = 0.9
    K: float = 10_000.0
    d: float = 0.01
    k1: float = 5.0
    k2: float = 5.0
    b1: float = 10.0
    b2: float = 10.0
    Q_max: float = 1.0
    w1: float = 0.5
    w2: float = 0.2
    r1: float = 0.4
    r2: float = 0.4
    c: float = 0.5

    def __post_init__(self) -> None:
        positive = ("r_max", "a0", "a1", "a2", "a3", "K", "d", "k1", "k2", "b1", "b2", "Q_max")
        nonnegative = ("g1", "g2", "w1", "w2", "r1", "r2", "c")
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        for name in nonnegative:
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def alpha(self) -> np.ndarray:
        return np.array(
            [
                [self.a0, self.a1, self.a1],
                [self.a2, self.a0, self.a3],
                [self.a2, self.a3, self.a0],
            ]
        )

    def g(self, i: int) -> float:
        return self.g1 if i == 1 else self.g2

    def b(self, i: int) -> float:
        return self.b1 if i == 1 else self.b2

    def k(self, i: int) -> float:
        return self.k1 if i == 1 else self.k2

    def r_cost(self, i: int) -> float:
        return self.r1 if i == 1 else self.r2

    def w(self, i: int) -> float:
        return self.w1 if i == 1 else self.w2


@dataclass(frozen=True, eq=False)
class EcoEvoState:
    """Doses, resident traits, and abundances (raw cell counts)."""

    m: np.ndarray
    u: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.m, dtype=float)
        u = np.array(self.u, dtype=float)
        x = np.array(self.x, dtype=float)
        if m.shape != (2,) or u.shape != (2,) or x.shape != (3,):
            raise ValueError("state must have 2 doses, 2 traits, 3 abundances")
        if np.any(m < -1e-12) or np.any(x < -1e-9):
            raise ValueError("doses and abundances must be nonnegative")
        if np.any(u < -1e-12) or np.any(u > 1.0 + 1e-12):
            raise ValueError("traits must lie in [0, 1]")
        m, u, x = np.maximum(m, 0.0), np.clip(u, 0.0, 1.0), np.maximum(x, 0.0)
        for arr in (m, u, x):
            arr.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "x", x)


class CertifyResult(NamedTuple):
    value: float
    arg: float
    slack: float


# ---------------------------------------------------------------------------
# model functions (xi denotes abundances scaled by the carrying capacity)
# ---------------------------------------------------------------------------


def _safe_exp(z: float) -> float:
    # Newton trial points can wander far outside [0, 1]; keep values finite
    return math.exp(min(z, 60.0))


def _G0(p: CancerModelParams, m, xi) -> float:
    phi = p.alpha[0] @ xi
    return p.r_max * (1.0 - phi) - p.d - m[0] / p.k1 - m[1] / p.k2


def _Gi(p: CancerModelParams, i: int, u_i: float, m, xi) -> float:
    phi = p.alpha[i] @ xi
    drug_own = m[i - 1] / (p.b(i) * u_i + p.k(i))
    drug_other = m[2 - i] / p.k(3 - i)
    return p.r_max * _safe_exp(-p.g(i) * u_i) * (1.0 - phi) - p.d - drug_own - drug_other


def _dGi_du(p: CancerModelParams, i: int, u_i: float, m, xi) -> float:
    phi = p.alpha[i] @ xi
    den = p.b(i) * u_i + p.k(i)
    return -p.g(i) * p.r_max * _safe_exp(-p.g(i) * u_i) * (1.0 - phi) + m[i - 1] * p.b(i) / den**2


def _d2Gi_du2(p: CancerModelParams, i: int, u_i: float, m, xi) -> float:
    phi = p.alpha[i] @ xi
    den = p.b(i) * u_i + p.k(i)
    return (
        p.g(i) ** 2 * p.r_max * _safe_exp(-p.g(i) * u_i) * (1.0 - phi)
        - 2.0 * m[i - 1] * p.b(i) ** 2 / den**3
    )


def _dG_dxi(p: CancerModelParams, i: int, u_i: float) -> np.ndarray:
    scale = p.r_max if i == 0 else p.r_max * _safe_exp(-p.g(i) * u_i)
    return -scale * p.alpha[i]


def _dG_dm(p: CancerModelParams, i: int, u_i: float) -> np.ndarray:
    out = np.array([-1.0 / p.k1, -1.0 / p.k2])
    if i in TRAITED:
        out[i - 1] = -1.0 / (p.b(i) * u_i + p.k(i))
    return out


def _ddGdu_dxi(p: CancerModelParams, i: int, u_i: float) -> np.ndarray:
    return p.g(i) * p.r_max * _safe_exp(-p.g(i) * u_i) * p.alpha[i]


def _ddGdu_dm(p: CancerModelParams, i: int, u_i: float) -> np.ndarray:
    out = np.zeros(2)
    out[i - 1] = p.b(i) / (p.b(i) * u_i + p.k(i)) ** 2
    return out


def fitness_G(i: int, u_i: float, m, x, p: CancerModelParams) -> float:
    """Per-capita growth rate of phenotype ``i``; ``u_i`` is ignored for i=0."""
    xi = np.asarray(x, dtype=float) / p.K
    m = np.asarray(m, dtype=float)
    if i == 0:
        return _G0(p, m, xi)
    if i in TRAITED:
        return _Gi(p, i, float(u_i), m, xi)
    raise ValueError("phenotype index must be 0, 1, or 2")


def fitness_grad_u(i: int, u_i: float, m, x, p: CancerModelParams) -> float:
    """Analytic derivative of the phenotype fitness in its own trait."""
    if i not in TRAITED:
        raise ValueError("only phenotypes 1 and 2 carry a trait")
    xi = np.asarray(x, dtype=float) / p.K
    return _dGi_du(p, i, float(u_i), np.asarray(m, dtype=float), xi)


def _q_value(p: CancerModelParams, m, u, xi) -> float:
    burden = float(np.sum(xi))
    return (
        p.Q_max
        - p.c * burden**2
        - p.w1 * m[0] ** 2
        - p.w2 * m[1] ** 2
        - p.r1 * u[0] ** 2
        - p.r2 * u[1] ** 2
    )


def quality_Q(state: EcoEvoState, p: CancerModelParams) -> float:
    """Leader quality-of-life objective, evaluated exactly from the state."""
    return _q_value(p, state.m, state.u, state.x / p.K)


def ecological_residual(state: EcoEvoState, p: CancerModelParams) -> np.ndarray:
    """Growth residuals x_i * G_i; the zero vector at an ecological rest point."""
    growth = np.array(
        [
            fitness_G(0, 0.0, state.m, state.x, p),
            fitness_G(1, state.u[0], state.m, state.x, p),
            fitness_G(2, state.u[1], state.m, state.x, p),
        ]
    )
    return state.x * growth


def certify(i: int, m, x, p: CancerModelParams) -> CertifyResult:
    """Global maximum of the mutant fitness of phenotype ``i`` over [0, 1].

    Dense-grid scan with local polish: golden-section inside the best grid
    cell plus safeguarded Newton on the trait derivative from the best cell
    and both endpoints.  The reported slack is a Lipschitz bound times half
    the grid spacing, so the true maximum is at most ``value + slack``.
    """
    if i not in TRAITED:
        raise ValueError("certification applies to phenotypes 1 and 2")
    m = np.asarray(m, dtype=float)
    xi = np.asarray(x, dtype=float) / p.K
    g, b, k = p.g(i), p.b(i), p.k(i)
    phi = float(p.alpha[i] @ xi)
    other = p.d + m[2 - i] / p.k(3 - i)
    grid = np.linspace(0.0, 1.0, CERTIFY_GRID)
    vals = p.r_max * np.exp(-g * grid) * (1.0 - phi) - other - m[i - 1] / (b * grid + k)
    best_idx = int(np.argmax(vals))
    h = grid[1] - grid[0]

    def G(u):
        return _Gi(p, i, u, m, xi)

    candidates = [0.0, 1.0, float(grid[best_idx])]
    # golden-section refinement of the best grid cell
    a_, b_ = max(0.0, grid[best_idx] - h), min(1.0, grid[best_idx] + h)
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    c_ = b_ - ratio * (b_ - a_)
    d_ = a_ + ratio * (b_ - a_)
    for _ in range(80):
        if G(c_) > G(d_):
            b_ = d_
        else:
            a_ = c_
        c_ = b_ - ratio * (b_ - a_)
        d_ = a_ + ratio * (b_ - a_)
    candidates.append(0.5 * (a_ + b_))
    for start in (float(grid[best_idx]), 0.0, 1.0):
        u = start
        for _ in range(60):
            d2 = _d2Gi_du2(p, i, u, m, xi)
            if d2 >= -1e-14:
                break
            u_new = min(1.0, max(0.0, u - _dGi_du(p, i, u, m, xi) / d2))
            if abs(u_new - u) <= 1e-14:
                u = u_new
                break
            u = u_new
        candidates.append(u)
    values = [G(u) for u in candidates]
    best = int(np.argmax(values))
    lipschitz = g * p.r_max * abs(1.0 - phi) + m[i - 1] * b / k**2
    return CertifyResult(value=float(values[best]), arg=float(candidates[best]), slack=lipschitz * h / 2.0)


# ---------------------------------------------------------------------------
# activity-pattern subproblems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _CaseSpec:
    mode: str  # "se" | "osess"
    alive: tuple[int, ...]
    activity: tuple[str, str]

    def label(self) -> str:
        alive = "".join(str(i) for i in self.alive) or "-"
        return f"alive={alive} traits={self.activity[0]},{self.activity[1]}"


def _case_specs(mode: str) -> list[_CaseSpec]:
    specs = []
    for bits in product((False, True), repeat=3):
        alive = tuple(i for i in range(3) if bits[i])
        for act in product(ACTIVITIES, repeat=2):
            specs.append(_CaseSpec(mode, alive, act))
    return specs


_PIN = {"lo": 0.0, "hi": 1.0}

# starting guesses for the scaled abundances (restricted to alive phenotypes)
_XI_GUESSES = (
    np.array([0.95, 0.06, 0.06]),
    np.array([0.58, 0.001, 0.095]),
    np.array([0.58, 0.095, 0.001]),
    np.array([0.30, 0.30, 0.30]),
    np.array([0.98, 0.0005, 0.0005]),
)

# row kinds: G / dGu evaluate at the resident trait, *_up at the invader trait


class _CaseSystem:
    """Square inner system of one activity pattern, solved per dose point.

    Unknowns are the scaled abundances of alive phenotypes plus every
    interior trait (residents of alive phenotypes; in stability mode also
    invader traits of extinct ones).  Rows are zero-fitness conditions for
    alive phenotypes and stationarity for each interior trait.  In the
    baseline mode the zero-fitness rows of extinct phenotypes remain as
    equality constraints on the dose search itself.
    """

    def __init__(self, spec: _CaseSpec, p: CancerModelParams):
        self.spec = spec
        self.p = p
        alive = set(spec.alive)
        self.unknowns: list[tuple[str, int]] = [("xi", j) for j in spec.alive]
        inner_rows: list[tuple[str, int]] = [("G", j) for j in spec.alive]
        outer_rows: list[tuple[str, int]] = []
        for i in TRAITED:
            act = spec.activity[i - 1]
            if spec.mode == "se":
                if act == "int":
                    self.unknowns.append(("u", i))
                    inner_rows.append(("dGu", i))
            else:
                if i in alive:
                    if act == "int":
                        self.unknowns.append(("u", i))
                        inner_rows.append(("dGu", i))
                elif act == "int":
                    self.unknowns.append(("up", i))
                    inner_rows.append(("dGu_up", i))
        if spec.mode == "se":
            outer_rows = [("G", j) for j in range(3) if j not in alive]
        self.inner_rows = inner_rows
        self.outer_rows = outer_rows
        self.n_inner = len(self.unknowns)
        self._warm: list[np.ndarray] = []
        self._cache: dict[bytes, tuple] = {}

    def _unpack(self, y: np.ndarray):
        xi = np.zeros(3)
        u = {i: _PIN.get(self.spec.activity[i - 1], 0.0) for i in TRAITED}
        up = dict(u)
        for val, (kind, idx) in zip(y, self.unknowns):
            if kind == "xi":
                xi[idx] = val
            elif kind == "u":
                u[idx] = val
                up[idx] = val
            else:
                up[idx] = val
        if self.spec.mode == "osess":
            for i in TRAITED:
                if i in self.spec.alive:
                    up[i] = u[i]
                else:
                    u[i] = 0.0  # extinct residents carry no trait burden
        return xi, u, up

    def _row_value(self, row, m, xi, u, up) -> float:
        kind, i = row
        if kind == "G":
            return _G0(self.p, m, xi) if i == 0 else _Gi(self.p, i, u[i], m, xi)
        if kind == "G_up":
            return _Gi(self.p, i, up[i], m, xi)
        if kind == "dGu":
            return _dGi_du(self.p, i, u[i], m, xi)
        return _dGi_du(self.p, i, up[i], m, xi)

    def _row_derivs(self, row, m, xi, u, up):
        """Partial derivatives (d/dxi vector, d/dm vector, d/dtrait, trait slot)."""
        kind, i = row
        p = self.p
        if kind in ("G", "dGu"):
            trait, slot = (u[i], ("u", i)) if i in TRAITED else (0.0, None)
        else:
            trait, slot = up[i], ("up", i)
            if self.spec.mode == "osess" and i in self.spec.alive:
                slot = ("u", i)
        if kind in ("G", "G_up"):
            dxi = _dG_dxi(p, i, trait)
            dm = _dG_dm(p, i, trait)
            dtrait = _dGi_du(p, i, trait, m, xi) if i in TRAITED else 0.0
        else:
            dxi = _ddGdu_dxi(p, i, trait)
            dm = _ddGdu_dm(p, i, trait)
            dtrait = _d2Gi_du2(p, i, trait, m, xi)
        return dxi, dm, dtrait, slot

    def _jacobian_rows(self, rows, m, xi, u, up):
        Jy = np.zeros((len(rows), self.n_inner))
        Jm = np.zeros((len(rows), 2))
        for r, row in enumerate(rows):
            dxi, dm, dtrait, slot = self._row_derivs(row, m, xi, u, up)
            Jm[r] = dm
            for cidx, unk in enumerate(self.unknowns):
                if unk[0] == "xi":
                    Jy[r, cidx] = dxi[unk[1]]
                elif unk == slot:
                    Jy[r, cidx] = dtrait
        return Jy, Jm

    def _residual(self, y: np.ndarray, m: np.ndarray) -> np.ndarray:
        xi, u, up = self._unpack(y)
        return np.array([self._row_value(r, m, xi, u, up) for r in self.inner_rows])

    def _newton(self, y0: np.ndarray, m: np.ndarray) -> np.ndarray | None:
        y = y0.copy()
        if self.n_inner == 0:
            return y
        res = self._residual(y, m)
        norm = float(np.max(np.abs(res)))
        for _ in range(60):
            if norm <= 1e-12:
                return y
            Jy, _ = self._jacobian_rows(self.inner_rows, m, *self._unpack(y))
            try:
                step = np.linalg.solve(Jy, -res)
            except np.linalg.LinAlgError:
                return None
            step_max = float(np.max(np.abs(step)))
            if step_max > 2.0:  # trust clamp in carrying-capacity units
                step *= 2.0 / step_max
            scale = 1.0
            for _ in range(10):
                y_try = y + scale * step
                res_try = self._residual(y_try, m)
                norm_try = float(np.max(np.abs(res_try)))
                if norm_try < norm or norm_try <= 1e-12:
                    y, res, norm = y_try, res_try, norm_try
                    break
                scale *= 0.5
            else:
                return None
        return y if norm <= 1e-10 else None

    def _start_list(self) -> list[np.ndarray]:
        starts = []
        for xi_guess in _XI_GUESSES:
            for u_guess in (0.2, 0.02):
                y = np.empty(self.n_inner)
                for k, (kind, idx) in enumerate(self.unknowns):
                    y[k] = xi_guess[idx] if kind == "xi" else u_guess
                starts.append(y)
        return starts

    def solve(self, m: np.ndarray):
        """Inner solution and dose sensitivities at m; (None, None) if stuck."""
        key = m.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        solution = None
        for y0 in self._warm + self._start_list():
            solution = self._newton(y0, m)
            if solution is not None:
                break
        if solution is None:
            out = (None, None)
        else:
            self._warm = [solution.copy()] + self._warm[:2]
            Jy, Jm = self._jacobian_rows(self.inner_rows, m, *self._unpack(solution))
            try:
                dydm = -np.linalg.solve(Jy, Jm) if self.n_inner else np.zeros((0, 2))
                out = (solution, dydm)
            except np.linalg.LinAlgError:
                out = (None, None)
        if len(self._cache) > 8192:
            self._cache.clear()
        self._cache[key] = out
        return out

    def row_value_grad(self, row, m: np.ndarray):
        """Value and total dose-gradient of one row at the inner solution."""
        y, dydm = self.solve(m)
        if y is None:
            return BAD_VALUE, np.zeros(2)
        xi, u, up = self._unpack(y)
        val = self._row_value(row, m, xi, u, up)
        Jy, Jm = self._jacobian_rows([row], m, xi, u, up)
        return val, (Jy @ dydm + Jm)[0]

    def unknown_value_grad(self, index: int, m: np.ndarray):
        y, dydm = self.solve(m)
        if y is None:
            return BAD_VALUE, np.zeros(2)
        return float(y[index]), dydm[index].copy()

    def q_value_grad(self, m: np.ndarray):
        y, dydm = self.solve(m)
        if y is None:
            return -BAD_VALUE, np.zeros(2)
        xi, u, up = self._unpack(y)
        p = self.p
        q = _q_value(p, m, (u[1], u[2]), xi)
        grad = np.array([-2.0 * p.w1 * m[0], -2.0 * p.w2 * m[1]])
        dQdy = np.zeros(self.n_inner)
        burden = float(np.sum(xi))
        for k, (kind, idx) in enumerate(self.unknowns):
            if kind == "xi":
                dQdy[k] = -2.0 * p.c * burden
            elif kind == "u":
                dQdy[k] = -2.0 * p.r_cost(idx) * u[idx]
        return q, grad + dydm.T @ dQdy

    def assemble(self, m: np.ndarray):
        y, _ = self.solve(m)
        if y is None:
            return None
        xi, u, up = self._unpack(y)
        return xi, u, up


def _outer_problem(sys_: _CaseSystem, m_max: float) -> nlp.SmoothProblem:
    spec = sys_.spec

    def objective(m):
        q, _ = sys_.q_value_grad(m)
        return -q

    def gradient(m):
        _, g = sys_.q_value_grad(m)
        return -g

    def row_constraint(row, sign=1.0):
        def fun(m):
            val, _ = sys_.row_value_grad(row, m)
            return sign * val

        def grad(m):
            _, g = sys_.row_value_grad(row, m)
            return sign * g

        return nlp.Constraint(fun, grad)

    def bound_constraint(index, sign, offset):
        def fun(m):
            val, _ = sys_.unknown_value_grad(index, m)
            return sign * val + offset

        def grad(m):
            _, g = sys_.unknown_value_grad(index, m)
            return sign * g

        return nlp.Constraint(fun, grad)

    equalities = [row_constraint(row) for row in sys_.outer_rows]
    inequalities = []
    alive = set(spec.alive)
    for i in TRAITED:
        act = spec.activity[i - 1]
        resident_constrained = spec.mode == "se" or i in alive
        if resident_constrained:
            if act == "lo":
                inequalities.append(row_constraint(("dGu", i), +1.0))
            elif act == "hi":
                inequalities.append(row_constraint(("dGu", i), -1.0))
        if spec.mode == "osess" and i not in alive:
            inequalities.append(row_constraint(("G_up", i), +1.0))
            if act == "lo":
                inequalities.append(row_constraint(("dGu_up", i), +1.0))
            elif act == "hi":
                inequalities.append(row_constraint(("dGu_up", i), -1.0))
    if spec.mode == "osess" and 0 not in alive:
        inequalities.append(row_constraint(("G", 0), +1.0))
    for k, (kind, _) in enumerate(sys_.unknowns):
        upper = XI_MAX if kind == "xi" else 1.0
        inequalities.append(bound_constraint(k, -1.0, 0.0))
        inequalities.append(bound_constraint(k, +1.0, -upper))
    return nlp.SmoothProblem(
        dimension=2,
        objective=objective,
        gradient=gradient,
        equality_constraints=tuple(equalities),
        inequality_constraints=tuple(inequalities),
        box_lower=np.zeros(2),
        box_upper=np.full(2, m_max),
    )


def _probe_feasible(sys_: _CaseSystem, m_max: float) -> bool:
    levels = [0.0] if m_max == 0.0 else [0.0, m_max / 8.0, m_max / 2.0, m_max]
    return any(sys_.solve(np.array([m1, m2]))[0] is not None for m1 in levels for m2 in levels)


def _validate_candidate(sys_: _CaseSystem, m: np.ndarray, feas_tol: float = 1e-7):
    """Re-check every case condition at the returned doses; None if violated."""
    parts = sys_.assemble(m)
    if parts is None:
        return None
    xi, u, up = parts
    if np.min(xi) < -1e-9 or np.max(xi) > XI_MAX + 1e-6:
        return None
    for i in TRAITED:
        for val in (u[i], up[i]):
            if val < -1e-9 or val > 1.0 + 1e-9:
                return None
    for row in sys_.outer_rows:
        val, _ = sys_.row_value_grad(row, m)
        if abs(val) > feas_tol:
            return None
    spec = sys_.spec
    alive = set(spec.alive)
    for i in TRAITED:
        act = spec.activity[i - 1]
        if spec.mode == "se" or i in alive:
            sign_val = _dGi_du(sys_.p, i, u[i], m, xi)
            if act == "lo" and sign_val > feas_tol:
                return None
            if act == "hi" and sign_val < -feas_tol:
                return None
        if spec.mode == "osess" and i not in alive:
            if _Gi(sys_.p, i, up[i], m, xi) > feas_tol:
                return None
            sign_val = _dGi_du(sys_.p, i, up[i], m, xi)
            if act == "lo" and sign_val > feas_tol:
                return None
            if act == "hi" and sign_val < -feas_tol:
                return None
    if spec.mode == "osess" and 0 not in alive and _G0(sys_.p, m, xi) > feas_tol:
        return None
    xi = np.maximum(xi, 0.0)
    xi[[j for j in range(3) if j not in alive]] = 0.0
    state = EcoEvoState(m=m, u=np.array([u[1], u[2]]), x=xi * sys_.p.K)
    return state, {i: up[i] for i in TRAITED}


def _enumerate_candidates(
    mode: str,
    p: CancerModelParams,
    m_max: float,
    starts: int,
    seed: int,
) -> tuple[list[CandidateSolution], list[str]]:
    specs = _case_specs(mode)
    seeds = np.random.SeedSequence(seed).generate_state(len(specs), dtype=np.uint32)
    candidates: list[CandidateSolution] = []
    notes: list[str] = []
    for idx, spec in enumerate(specs):
        sys_ = _CaseSystem(spec, p)
        if len(sys_.inner_rows) != sys_.n_inner:
            notes.append(f"{spec.label()}: skipped (non-square inner system)")
            continue
        if not _probe_feasible(sys_, m_max):
            notes.append(f"{spec.label()}: no rest point found")
            continue
        problem = _outer_problem(sys_, m_max)
        try:
            report = nlp.minimize(
                problem,
                starts=starts,
                seed=int(seeds[idx]),
                feas_tol=1e-8,
                opt_tol=1e-9,
                inner_cap=1500,
            )
        except (nlp.InfeasibleError, nlp.NonconvergedError) as exc:
            notes.append(f"{spec.label()}: {type(exc).__name__}")
            continue
        validated = _validate_candidate(sys_, report.best_point)
        if validated is None:
            notes.append(f"{spec.label()}: solution failed validation")
            continue
        state, invaders = validated
        candidates.append(
            CandidateSolution(
                state=state,
                q_value=quality_Q(state, p),
                case=spec.label(),
                invader_traits=invaders,
                solver_report=report,
            )
        )
    return candidates, notes


@dataclass(frozen=True, eq=False)
class CandidateSolution:
    state: EcoEvoState
    q_value: float
    case: str
    invader_traits: dict
    solver_report: nlp.SolveReport | None


@dataclass(frozen=True, eq=False)
class ContinuousSolution:
    state: EcoEvoState
    q_value: float
    certification: np.ndarray  # growth bound per phenotype
    certified: bool
    mode: str
    alive_pattern: tuple[int, ...]
    solver_report: nlp.SolveReport | None
    diagnostics: tuple[str, ...] = ()


def _certification_values(state: EcoEvoState, p: CancerModelParams) -> np.ndarray:
    """Per-phenotype invasion bounds: raw growth for 0, trait maxima for 1, 2."""
    return np.array(
        [
            fitness_G(0, 0.0, state.m, state.x, p),
            certify(1, state.m, state.x, p).value,
            certify(2, state.m, state.x, p).value,
        ]
    )


def _alive_pattern(state: EcoEvoState) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(state.x > 0.0))


def gen_osess(
    p: CancerModelParams,
    bounds: float = 5.0,
    starts: int = 8,
    seed: int = 0,
) -> CandidateSolution:
    """Best stability-constrained candidate over all activity patterns."""
    candidates, notes = _enumerate_candidates("osess", p, bounds, starts, seed)
    if not candidates:
        raise NoCandidateError("; ".join(notes[-5:]) or "no subproblem produced a candidate")
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.q_value > best.q_value:
            best = cand
    return best


def compute_continuous_osess(
    p: CancerModelParams,
    bounds: float = 5.0,
    starts: int = 8,
    seed: int = 0,
    tol: ToleranceSet | None = None,
) -> ContinuousSolution:
    """Generate a candidate and certify it against every mutant trait.

    ``certified`` is the overall verdict: each phenotype's invasion bound
    must not exceed eps_inv.  An uncertified result is a legitimate outcome
    reported as a failure, not an exception.
    """
    tol = tol or ToleranceSet()
    cand = gen_osess(p, bounds=bounds, starts=starts, seed=seed)
    cert = _certification_values(cand.state, p)
    certified = bool(np.all(cert <= tol.eps_inv))
    return ContinuousSolution(
        state=cand.state,
        q_value=cand.q_value,
        certification=cert,
        certified=certified,
        mode="osess",
        alive_pattern=_alive_pattern(cand.state),
        solver_report=cand.solver_report,
        diagnostics=(cand.case,),
    )


def compute_se_continuous(
    p: CancerModelParams,
    bounds: float = 5.0,
    starts: int = 8,
    seed: int = 0,
    tol: ToleranceSet | None = None,
) -> ContinuousSolution:
    """Baseline equilibrium: every phenotype at fitness equilibrium with
    best-responding traits.

    Candidates whose resident traits miss the global fitness peak by more
    than a value tolerance are discarded (stationarity alone admits local
    maxima); the survivors compete on the leader objective.  The winner is
    also pushed through invasion certification for reporting.
    """
    tol = tol or ToleranceSet()
    candidates, notes = _enumerate_candidates("se", p, bounds, starts, seed)
    argmax_ok: list[CandidateSolution] = []
    for cand in candidates:
        ok = True
        for i in TRAITED:
            peak = certify(i, cand.state.m, cand.state.x, p)
            resident = fitness_G(i, cand.state.u[i - 1], cand.state.m, cand.state.x, p)
            if resident < peak.value - ARGMAX_VALUE_TOL:
                ok = False
                break
        if ok:
            argmax_ok.append(cand)
    if not argmax_ok:
        raise NoCandidateError("; ".join(notes[-5:]) or "no baseline candidate")
    best = argmax_ok[0]
    for cand in argmax_ok[1:]:
        if cand.q_value > best.q_value:
            best = cand
    cert = _certification_values(best.state, p)
    return ContinuousSolution(
        state=best.state,
        q_value=best.q_value,
        certification=cert,
        certified=bool(np.all(cert <= tol.eps_inv)),
        mode="se",
        alive_pattern=_alive_pattern(best.state),
        solver_report=best.solver_report,
        diagnostics=(best.case,),
    )
