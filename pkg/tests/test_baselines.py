import math

import numpy as np
import pytest

from krylovreg import densela
from krylovreg.baselines import (
    DenseProblem,
    discrepancy_h,
    dp_lambda_bisection,
    full_newton_solve,
    optimal_lambda_grid,
    tikhonov_solve,
)
from krylovreg.errors import NoBracket


@pytest.fixture(scope="module")
def heat_dense(heat200):
    return DenseProblem.from_instance(heat200.problem)


@pytest.fixture(scope="module")
def shaw_dense(shaw200):
    return DenseProblem.from_instance(shaw200.problem)


def random_dense_problem(m, n, seed=0, tau=1.001):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, n))
    half_m = rng.standard_normal((m, m))
    m_inv = half_m @ half_m.T / m + np.eye(m)
    half_n = rng.standard_normal((n, n))
    n_mat = half_n @ half_n.T / n + np.eye(n)
    n_inv = np.linalg.inv(n_mat)
    n_inv = 0.5 * (n_inv + n_inv.T)
    x = rng.standard_normal(n)
    b = a @ x + 0.3 * rng.standard_normal(m)
    return DenseProblem(a=a, m_inv=m_inv, n_inv=n_inv, n_mat=n_mat, b=b, tau_m=tau * m)


class TestDenseProblem:
    def test_inverse_quality(self, heat_dense):
        n = heat_dense.n_mat.shape[0]
        err = np.abs(heat_dense.n_inv @ heat_dense.n_mat - np.eye(n)).max()
        assert err <= 1e-8

    def test_weights_are_spd(self, heat_dense):
        densela.cholesky(heat_dense.m_inv)
        densela.cholesky(heat_dense.n_inv)


class TestTikhonovSolve:
    def test_lambda_zero_gives_zero(self, heat_dense):
        np.testing.assert_array_equal(tikhonov_solve(heat_dense, 0.0), 0.0)

    def test_normal_equation_residual(self):
        dp = random_dense_problem(50, 40, seed=1)
        lam = 0.7
        x = tikhonov_solve(dp, lam)
        residual = (dp.n_inv + lam * dp.gram) @ x - lam * dp.rhs
        scale = np.linalg.norm(dp.n_inv + lam * dp.gram, 2) * np.linalg.norm(x)
        assert np.linalg.norm(residual) <= 1e-10 * scale

    def test_distinct_multipliers_distinct_solutions(self, heat_dense):
        x1 = tikhonov_solve(heat_dense, 0.1)
        x2 = tikhonov_solve(heat_dense, 1.0)
        assert np.linalg.norm(x1 - x2) > 1e-8 * np.linalg.norm(x1)


class TestDiscrepancyGap:
    def test_value_at_zero(self, heat_dense):
        expected = 0.5 * (float(heat_dense.b @ (heat_dense.m_inv @ heat_dense.b)) - heat_dense.tau_m)
        assert discrepancy_h(heat_dense, 0.0) == pytest.approx(expected, rel=1e-12)
        assert discrepancy_h(heat_dense, 0.0) > 0

    def test_strictly_decreasing(self, heat_dense):
        grid = np.logspace(-3, 3, 13)
        values = [discrepancy_h(heat_dense, lam) for lam in grid]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_negative_at_large_multiplier_on_heat(self, heat_dense, heat200):
        # oracle: weighted minimum-norm least squares gives the limiting
        # misfit, which bounds the gap from below; the decaying spectrum of
        # the heat kernel makes the approach to the limit very slow, so only
        # the sign and the bound are asserted here
        p = heat200.problem
        from krylovreg.linop import materialize

        a = materialize(p.a)
        m_mat = np.linalg.inv(heat_dense.m_inv)
        x_min = densela.min_norm_least_squares(a, p.b, 0.5 * (m_mat + m_mat.T), heat_dense.n_mat)
        r = a @ x_min - p.b
        limit = 0.5 * (float(r @ (heat_dense.m_inv @ r)) - heat_dense.tau_m)
        assert limit < 0
        val = discrepancy_h(heat_dense, 1e8)
        assert val < 0
        assert val >= limit * (1.0 + 1e-8)

    def test_limit_reached_on_well_conditioned_instance(self):
        # with singular values of order one, lambda = 1e8 saturates the gap
        dp = random_dense_problem(30, 20, seed=5)
        m_mat = np.linalg.inv(dp.m_inv)
        x_min = densela.min_norm_least_squares(dp.a, dp.b, 0.5 * (m_mat + m_mat.T), dp.n_mat)
        r = dp.a @ x_min - dp.b
        limit = 0.5 * (float(r @ (dp.m_inv @ r)) - dp.tau_m)
        assert limit < 0
        assert discrepancy_h(dp, 1e8) == pytest.approx(limit, abs=1e-6 * abs(limit))


class TestBisection:
    def test_gap_nearly_zero_at_root(self, heat_dense):
        lam, _ = dp_lambda_bisection(heat_dense, tol_lambda=1e-12)
        assert abs(discrepancy_h(heat_dense, lam)) <= 1e-10 * heat_dense.tau_m

    def test_kkt_residual(self, heat_dense):
        lam, x = dp_lambda_bisection(heat_dense)
        stat = heat_dense.n_inv @ x + lam * (
            heat_dense.a.T @ (heat_dense.m_inv @ (heat_dense.a @ x - heat_dense.b))
        )
        scale = np.linalg.norm(heat_dense.n_inv @ x) + lam * np.linalg.norm(
            heat_dense.a.T @ (heat_dense.m_inv @ heat_dense.b)
        )
        assert np.linalg.norm(stat) <= 1e-8 * scale
        assert abs(heat_dense.misfit_sq(x) - heat_dense.tau_m) <= 1e-8 * heat_dense.tau_m

    def test_two_by_two_hand_instance(self):
        # A = I, identity weights, b = (3, 4), target 4:
        # the misfit is ||b||^2 / (1 + lam)^2, so the root is ||b|| / 2 - 1
        dp = DenseProblem(
            a=np.eye(2), m_inv=np.eye(2), n_inv=np.eye(2), n_mat=np.eye(2),
            b=np.array([3.0, 4.0]), tau_m=4.0,
        )
        lam, x = dp_lambda_bisection(dp, tol_lambda=1e-12)
        assert lam == pytest.approx(1.5, rel=1e-10)
        np.testing.assert_allclose(x, np.array([3.0, 4.0]) * 0.6, rtol=1e-10)

    def test_no_bracket_when_infeasible(self):
        dp = DenseProblem(
            a=np.eye(2), m_inv=np.eye(2), n_inv=np.eye(2), n_mat=np.eye(2),
            b=np.array([0.1, 0.1]), tau_m=4.0,
        )
        with pytest.raises(NoBracket):
            dp_lambda_bisection(dp)


class TestOptimalGrid:
    def test_singleton_grid(self, heat_dense, heat200):
        lam, _ = optimal_lambda_grid(heat_dense, heat200.problem.x_true, grid=np.array([0.5]))
        assert lam == 0.5

    def test_beats_discrepancy_root(self, heat_dense, heat200):
        x_true = heat200.problem.x_true
        lam_opt, x_opt = optimal_lambda_grid(heat_dense, x_true)
        _, x_dp = dp_lambda_bisection(heat_dense)
        assert np.linalg.norm(x_opt - x_true) <= np.linalg.norm(x_dp - x_true)


class TestFullNewton:
    @pytest.mark.parametrize("fixture", ["heat200", "shaw200"])
    def test_agrees_with_projected_solver(self, fixture, request):
        audit = request.getfixturevalue(fixture)
        dense = DenseProblem.from_instance(audit.problem)
        res = full_newton_solve(dense, audit.opts, x_true=audit.problem.x_true)
        assert res.status == "converged-dp"
        assert abs(res.lam - audit.result.lam) / audit.result.lam <= 1e-6
        assert np.linalg.norm(res.x - audit.result.x) <= 1e-6 * np.linalg.norm(audit.result.x)

    def test_merit_monotone_and_residual_floor(self, heat_dense, heat200):
        res = full_newton_solve(heat_dense, heat200.opts)
        hs = [rec.merit_h for rec in res.history]
        assert all(b <= a for a, b in zip(hs, hs[1:]))
        floor = math.sqrt(heat_dense.tau_m) * (1 - 1e-12)
        assert all(rec.residual_m_norm >= floor for rec in res.history)

    def test_relative_error_recorded(self, heat_dense, heat200):
        res = full_newton_solve(heat_dense, heat200.opts, x_true=heat200.problem.x_true)
        assert all(rec.relative_error is not None for rec in res.history)
