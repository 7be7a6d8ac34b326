import numpy as np
import pytest

from evostack.nlp import (
    Constraint,
    InfeasibleError,
    SmoothProblem,
    check_gradient,
    minimize,
    simplex_project,
)

from oracles import grid_min_2d, sort_project_simplex


def quad_on_simplex(n):
    return SmoothProblem(
        dimension=n,
        objective=lambda z: float(z @ z),
        gradient=lambda z: 2.0 * z,
        box_lower=np.zeros(n),
        box_upper=np.ones(n),
        simplex_blocks=((0, n),),
    )


class TestMinimize:
    def test_quadratic_over_simplex_hits_uniform(self):
        rep = minimize(quad_on_simplex(3), starts=4, seed=0)
        assert np.allclose(rep.best_point, 1.0 / 3.0, atol=1e-8)
        assert rep.best_value == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_linear_over_simplex_hits_vertex(self):
        a = np.array([0.3, 1.7, 0.9])
        prob = SmoothProblem(
            dimension=3,
            objective=lambda z: float(-a @ z),
            gradient=lambda z: -a,
            box_lower=np.zeros(3),
            box_upper=np.ones(3),
            simplex_blocks=((0, 3),),
        )
        rep = minimize(prob, starts=4, seed=1)
        assert np.allclose(rep.best_point, [0.0, 1.0, 0.0], atol=1e-8)

    def test_rosenbrock_box_matches_grid_oracle(self):
        def f(u, v):
            return (1.0 - u) ** 2 + 100.0 * (v - u * u) ** 2

        prob = SmoothProblem(
            dimension=2,
            objective=lambda z: float(f(z[0], z[1])),
            gradient=lambda z: np.array(
                [
                    -2.0 * (1.0 - z[0]) - 400.0 * z[0] * (z[1] - z[0] ** 2),
                    200.0 * (z[1] - z[0] ** 2),
                ]
            ),
            box_lower=np.zeros(2),
            box_upper=np.full(2, 2.0),
        )
        rep = minimize(prob, starts=8, seed=3)
        oracle_pt, oracle_val = grid_min_2d(f, [0.0, 0.0], [2.0, 2.0], 1e-3)
        assert np.allclose(oracle_pt, [1.0, 1.0])
        assert rep.best_value <= oracle_val + 1e-9
        assert np.allclose(rep.best_point, [1.0, 1.0], atol=1e-4)

    def test_equality_constraint(self):
        # min (x0 - 2)^2 + (x1 - 1)^2  s.t.  x0 + x1 = 1  ->  (1, 0)
        prob = SmoothProblem(
            dimension=2,
            objective=lambda z: float((z[0] - 2.0) ** 2 + (z[1] - 1.0) ** 2),
            gradient=lambda z: np.array([2.0 * (z[0] - 2.0), 2.0 * (z[1] - 1.0)]),
            equality_constraints=(
                Constraint(lambda z: float(z[0] + z[1] - 1.0), lambda z: np.array([1.0, 1.0])),
            ),
            box_lower=np.full(2, -5.0),
            box_upper=np.full(2, 5.0),
        )
        rep = minimize(prob, starts=4, seed=0)
        assert np.allclose(rep.best_point, [1.0, 0.0], atol=1e-6)
        assert rep.feasibility_residual <= 1e-8

    def test_infeasible_raises(self):
        prob = SmoothProblem(
            dimension=1,
            objective=lambda z: 0.0,
            gradient=lambda z: np.zeros(1),
            equality_constraints=(
                Constraint(lambda z: float(z[0]), lambda z: np.ones(1)),
                Constraint(lambda z: float(z[0] - 1.0), lambda z: np.ones(1)),
            ),
            box_lower=np.zeros(1),
            box_upper=np.ones(1),
        )
        with pytest.raises(InfeasibleError):
            minimize(prob, starts=2, seed=0)

    def test_deterministic_bitwise(self):
        prob = quad_on_simplex(4)
        r1 = minimize(prob, starts=6, seed=42)
        r2 = minimize(prob, starts=6, seed=42)
        assert np.array_equal(r1.best_point, r2.best_point)
        assert r1.best_value == r2.best_value

    def test_incumbent_feasibility_never_regresses(self):
        prob = SmoothProblem(
            dimension=3,
            objective=lambda z: float(z @ np.array([1.0, 2.0, 3.0])),
            gradient=lambda z: np.array([1.0, 2.0, 3.0]),
            inequality_constraints=(
                Constraint(lambda z: float(0.2 - z[0]), lambda z: np.array([-1.0, 0.0, 0.0])),
            ),
            box_lower=np.zeros(3),
            box_upper=np.ones(3),
            simplex_blocks=((0, 3),),
        )
        rep = minimize(prob, starts=8, seed=5)
        trace = np.asarray(rep.incumbent_residuals)
        assert trace.size > 0
        assert np.all(np.diff(trace) <= 0.0 + 1e-18)


class TestCheckGradient:
    def test_linear_function(self):
        a = np.array([1.0, -2.0, 0.5])
        prob = SmoothProblem(
            dimension=3,
            objective=lambda z: float(a @ z),
            gradient=lambda z: a,
        )
        assert check_gradient(prob, np.array([0.1, 0.2, 0.3])) <= 1e-10

    def test_invasion_quadratic(self):
        rng = np.random.default_rng(9)
        B = rng.normal(size=(4, 4))
        x = rng.dirichlet(np.ones(4))

        def f(y):
            return float(y @ B @ y - x @ B @ y)

        def g(y):
            return (B + B.T) @ y - B.T @ x

        prob = SmoothProblem(dimension=4, objective=f, gradient=g)
        pt = rng.dirichlet(np.ones(4))
        assert check_gradient(prob, pt) <= 1e-7

    def test_covers_constraints(self):
        prob = SmoothProblem(
            dimension=2,
            objective=lambda z: 0.0,
            gradient=lambda z: np.zeros(2),
            equality_constraints=(
                Constraint(lambda z: float(z[0] ** 2), lambda z: np.array([2.0 * z[0] + 0.5, 0.0])),
            ),
        )
        # deliberately wrong constraint gradient must be flagged
        assert check_gradient(prob, np.array([0.3, 0.4])) > 1e-2


class TestSimplexProjection:
    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(500):
            n = int(rng.integers(1, 9))
            v = rng.normal(scale=3.0, size=n)
            got = simplex_project(v)
            want = sort_project_simplex(v)
            assert np.max(np.abs(got - want)) <= 1e-10
            assert abs(got.sum() - 1.0) <= 1e-12
            assert got.min() >= 0.0

    def test_idempotent_on_simplex(self):
        v = np.array([0.2, 0.3, 0.5])
        assert np.allclose(simplex_project(v), v, atol=1e-15)
