"""Dense desk-scale baselines: direct regularized solves, discrepancy-root
bisection, optimal-parameter grid search, and the full-space Newton method.

These are ground-truth oracles for the projected solver.  They materialize
everything, factor the prior covariance, and pay full dense costs; they are
only meant for problems small enough to fit the materialization guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import densela
from .errors import InvalidParam, NoBracket
from .linop import materialize, materialize_spd
from .problems import ProblemInstance
from .projnewton import IterationRecord, PntOptions, PntResult


@dataclass
class DenseProblem:
    """Fully materialized problem data shared by the dense baselines."""

    a: np.ndarray
    m_inv: np.ndarray
    n_inv: np.ndarray
    n_mat: np.ndarray
    b: np.ndarray
    tau_m: float
    _gram: np.ndarray | None = field(default=None, repr=False)
    _rhs: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_instance(cls, p: ProblemInstance, tau: float | None = None) -> "DenseProblem":
        a = materialize(p.a)
        m_inv = materialize_spd(p.m_inv)
        n_mat = materialize_spd(p.n_cov)
        chol = densela.cholesky(n_mat)
        n_inv = scipy.linalg.cho_solve(
            (chol, True), np.eye(n_mat.shape[0]), check_finite=False
        )
        n_inv = 0.5 * (n_inv + n_inv.T)
        tau = p.tau if tau is None else tau
        return cls(a=a, m_inv=m_inv, n_inv=n_inv, n_mat=n_mat, b=np.asarray(p.b, float),
                   tau_m=tau * a.shape[0])

    @property
    def gram(self) -> np.ndarray:
        """A' inv(M) A, cached."""
        if self._gram is None:
            self._gram = self.a.T @ (self.m_inv @ self.a)
            self._gram = 0.5 * (self._gram + self._gram.T)
        return self._gram

    @property
    def rhs(self) -> np.ndarray:
        """A' inv(M) b, cached."""
        if self._rhs is None:
            self._rhs = self.a.T @ (self.m_inv @ self.b)
        return self._rhs

    def misfit_sq(self, x: np.ndarray) -> float:
        r = self.a @ x - self.b
        return float(r @ (self.m_inv @ r))


def tikhonov_solve(dp: DenseProblem, lam: float) -> np.ndarray:
    """Direct solution of the regularized normal equations at multiplier lam."""
    if lam < 0:
        raise InvalidParam("lambda must be non-negative")
    if lam == 0.0:
        return np.zeros(dp.a.shape[1])
    system = dp.n_inv + lam * dp.gram
    chol = densela.cholesky(0.5 * (system + system.T))
    return scipy.linalg.cho_solve((chol, True), lam * dp.rhs, check_finite=False)


def discrepancy_h(dp: DenseProblem, lam: float) -> float:
    """Signed half-gap between the weighted misfit and its target."""
    x = tikhonov_solve(dp, lam)
    return 0.5 * (dp.misfit_sq(x) - dp.tau_m)


def dp_lambda_bisection(
    dp: DenseProblem, tol_lambda: float = 1e-12
) -> tuple[float, np.ndarray]:
    """Root of the discrepancy gap by bisection.

    The gap is strictly decreasing in lambda, so a doubling search brackets
    the unique root, which is then narrowed to the requested relative width.
    """
    if discrepancy_h(dp, 0.0) <= 0.0:
        raise NoBracket("discrepancy gap non-positive at lambda = 0")
    lo = 0.0
    hi = 1.0
    for _ in range(60):
        if discrepancy_h(dp, hi) < 0.0:
            break
        lo = hi
        hi *= 2.0
    else:
        raise NoBracket("discrepancy gap never became negative while doubling")
    while hi - lo > tol_lambda * hi:
        mid = 0.5 * (lo + hi)
        if discrepancy_h(dp, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return lam, tikhonov_solve(dp, lam)


def optimal_lambda_grid(
    dp: DenseProblem, x_true: np.ndarray, grid: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Best multiplier on a log grid by true-solution error, with one refinement."""
    if grid is None:
        grid = np.logspace(-4, 6, 60)
    grid = np.asarray(grid, dtype=float)
    errors = [float(np.linalg.norm(tikhonov_solve(dp, lam) - x_true)) for lam in grid]
    best = int(np.argmin(errors))
    if grid.size > 1:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, grid.size - 1)]
        fine = np.logspace(math.log10(lo), math.log10(hi), 20)
        fine_errors = [
            float(np.linalg.norm(tikhonov_solve(dp, lam) - x_true)) for lam in fine
        ]
        fbest = int(np.argmin(fine_errors))
        if fine_errors[fbest] < errors[best]:
            return float(fine[fbest]), tikhonov_solve(dp, fine[fbest])
    return float(grid[best]), tikhonov_solve(dp, grid[best])


def full_newton_solve(
    dp: DenseProblem,
    opts: PntOptions | None = None,
    x_true: np.ndarray | None = None,
) -> PntResult:
    """Full-space Newton iteration on the Lagrangian stationarity system.

    Solves the (n+1) x (n+1) Newton system exactly each iteration and runs
    the same backtracking line search and positivity safeguard as the
    projected method, with the plain 2-norm merit on the full gradient.
    Stops on the same discrepancy / merit criteria.
    """
    opts = PntOptions() if opts is None else opts
    opts.validate()
    n = dp.a.shape[1]
    x = np.zeros(n)
    lam = opts.lambda0
    history: list[IterationRecord] = []
    status = "max-iters"

    gram = dp.gram
    merit_tol = opts.merit_tol

    def full_gradient(x_vec, lam_val, r_vec):
        top = lam_val * (dp.a.T @ (dp.m_inv @ r_vec)) + dp.n_inv @ x_vec
        last = 0.5 * float(r_vec @ (dp.m_inv @ r_vec)) - 0.5 * dp.tau_m
        return top, last

    for k in range(1, opts.max_iters + 1):
        r = dp.a @ x - dp.b
        w = dp.a.T @ (dp.m_inv @ r)
        z = dp.n_inv @ x
        res_sq = float(r @ (dp.m_inv @ r))
        top = lam * w + z
        last = 0.5 * res_sq - 0.5 * dp.tau_m
        f = np.concatenate([top, [last]])
        f_sq = float(f @ f)

        jac = np.empty((n + 1, n + 1))
        jac[:n, :n] = lam * gram + dp.n_inv
        jac[:n, n] = w
        jac[n, :n] = w
        jac[n, n] = 0.0
        cond = densela.condition_estimate_1norm(jac)
        step = densela.lu_solve(jac, -f)
        dx, dlam = step[:n], float(step[n])

        # Trial quantities are affine in the step, so each backtrack is O(n).
        a_dx = dp.a @ dx
        m_a_dx = dp.m_inv @ a_dx
        q1 = float(r @ m_a_dx)
        q2 = float(a_dx @ m_a_dx)
        w_dx = dp.a.T @ m_a_dx
        z_dx = dp.n_inv @ dx

        gamma = 1.0 if dlam >= 0 else min(1.0, -opts.eta * lam / dlam)
        backtracks = 0
        accepted = False
        while True:
            if gamma < opts.min_step:
                break
            lam_t = lam + gamma * dlam
            res_sq_t = res_sq + 2.0 * gamma * q1 + gamma * gamma * q2
            top_t = lam_t * (w + gamma * w_dx) + z + gamma * z_dx
            last_t = 0.5 * res_sq_t - 0.5 * dp.tau_m
            trial = 0.5 * (float(top_t @ top_t) + last_t * last_t)
            if trial <= (0.5 - opts.c * gamma) * f_sq:
                accepted = True
                break
            gamma *= opts.eta
            backtracks += 1
        if not accepted:
            status = "step-too-small"
            break

        x = x + gamma * dx
        lam = lam + gamma * dlam
        r_new = dp.a @ x - dp.b
        res_sq_new = float(r_new @ (dp.m_inv @ r_new))
        top_new, last_new = full_gradient(x, lam, r_new)
        merit_new = 0.5 * (float(top_new @ top_new) + last_new * last_new)
        rel_error = None
        if x_true is not None:
            rel_error = float(np.linalg.norm(x - x_true) / np.linalg.norm(x_true))
        history.append(
            IterationRecord(
                k=k,
                lam=lam,
                merit_h=merit_new,
                residual_m_norm=math.sqrt(res_sq_new),
                gamma=gamma,
                jacobian_condition=cond,
                backtracks=backtracks,
                relative_error=rel_error,
            )
        )
        if abs(res_sq_new - dp.tau_m) <= opts.dp_tol:
            status = "converged-dp"
            break
        if merit_new <= merit_tol:
            status = "converged-merit"
            break

    return PntResult(x=x, lam=lam, mu=1.0 / lam, history=history, status=status)
