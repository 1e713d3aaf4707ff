"""Projected Newton solver for noise-constrained Tikhonov regularization.

The constrained problem minimizes the prior norm of x subject to the
weighted data misfit matching its expected value tau * m (the discrepancy
principle).  Its Lagrangian stationarity conditions form a nonlinear system
in (x, lambda); this solver restricts that system to the growing Krylov
subspace produced by the weighted bidiagonalization, so each step only
solves a small dense linear system and runs a backtracking line search on a
merit function that can be evaluated from the projected quantities alone.
No inverse of the prior covariance is ever applied.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import densela
from .errors import (
    AssumptionViolated,
    DimensionMismatch,
    InvalidParam,
    SingularMatrix,
    SingularProjectedJacobian,
    StepTooSmall,
)
from .gkb import Bidiagonalization, BidiagonalMatrix
from .problems import ProblemInstance, check_assumption


@dataclass
class PntOptions:
    """Solver hyperparameters.

    ``tol`` is the merit-based stopping threshold; when left at None it is
    derived from ``dp_tol`` so the discrepancy-based stop always fires first
    on problems where it can be met.
    """

    tau: float = 1.001
    lambda0: float = 0.1
    c: float = 1e-4
    eta: float = 0.9
    tol: float | None = None
    dp_tol: float = 1e-8
    max_iters: int = 200
    min_step: float = 1e-16
    k0: int = 1
    reorthogonalize: bool = True
    check_assumption: bool = True

    def validate(self) -> None:
        if self.tau <= 1:
            raise InvalidParam("tau must exceed 1")
        if self.lambda0 <= 0:
            raise InvalidParam("lambda0 must be positive")
        if not 0 < self.c < 1:
            raise InvalidParam("c must lie in (0, 1)")
        if not 0 < self.eta < 1:
            raise InvalidParam("eta must lie in (0, 1)")
        if self.dp_tol <= 0 or (self.tol is not None and self.tol <= 0):
            raise InvalidParam("tolerances must be positive")
        if self.max_iters < 1 or self.k0 < 1:
            raise InvalidParam("max_iters and k0 must be at least 1")
        if self.min_step <= 0:
            raise InvalidParam("min_step must be positive")

    @property
    def merit_tol(self) -> float:
        # Subordinate to the discrepancy stop: a merit this small forces the
        # discrepancy gap below dp_tol, so the dp criterion fires first.
        return self.tol if self.tol is not None else self.dp_tol**2 / 8.0


@dataclass
class IterationRecord:
    """Per-step trace of the solver."""

    k: int
    lam: float
    merit_h: float
    residual_m_norm: float
    gamma: float
    jacobian_condition: float
    backtracks: int
    relative_error: float | None = None


@dataclass
class PntResult:
    x: np.ndarray
    lam: float
    mu: float
    history: list[IterationRecord]
    status: str  # converged-dp | converged-merit | step-too-small | max-iters


@dataclass
class ProjectedState:
    """Current iterate restricted to the Krylov subspace."""

    b_mat: BidiagonalMatrix  # matrix pairing A with the bases
    b_merit: BidiagonalMatrix  # trailing-column extension for trial merits
    y_bar: np.ndarray
    lam: float
    beta1: float
    tau_m: float

    def __post_init__(self):
        if self.y_bar.size != self.b_mat.cols:
            raise DimensionMismatch(
                f"y has length {self.y_bar.size}, matrix has {self.b_mat.cols} columns"
            )


@dataclass
class IterationContext:
    """Everything an observer needs to audit one accepted step."""

    k: int
    state: ProjectedState
    gradient: np.ndarray
    jacobian: np.ndarray
    dy: np.ndarray
    dlam: float
    gamma: float
    backtracks: int
    y_new: np.ndarray
    lam_new: float
    merit_new: float
    residual_sq: float
    bidiag: Bidiagonalization
    basis_cols: int


def _pad(y: np.ndarray, length: int) -> np.ndarray:
    if y.size == length:
        return y
    if y.size > length:
        raise DimensionMismatch("iterate longer than the projected system")
    out = np.zeros(length)
    out[: y.size] = y
    return out


def _gradient_parts(
    b: BidiagonalMatrix, y: np.ndarray, lam: float, beta1: float, tau_m: float
) -> tuple[np.ndarray, float, float]:
    """Projected residual pieces: (top block, last entry, residual norm^2)."""
    res = b.matvec(y)
    res[0] -= beta1
    res_sq = float(res @ res)
    top = lam * b.rmatvec(res) + y
    last = 0.5 * res_sq - 0.5 * tau_m
    return top, last, res_sq


def projected_gradient(ps: ProjectedState) -> np.ndarray:
    """Gradient of the Lagrangian restricted to the subspace."""
    top, last, _ = _gradient_parts(ps.b_mat, ps.y_bar, ps.lam, ps.beta1, ps.tau_m)
    return np.concatenate([top, [last]])


def projected_jacobian(ps: ProjectedState) -> np.ndarray:
    """Symmetric (k+1) x (k+1) Jacobian of the projected gradient."""
    b = ps.b_mat
    k = b.cols
    res = b.matvec(ps.y_bar)
    res[0] -= ps.beta1
    d = b.rmatvec(res)
    gram_d, gram_off = b.gram_tridiagonal()
    jac = np.zeros((k + 1, k + 1))
    idx = np.arange(k)
    jac[idx, idx] = ps.lam * gram_d + 1.0
    jac[idx[:-1], idx[:-1] + 1] = ps.lam * gram_off
    jac[idx[:-1] + 1, idx[:-1]] = ps.lam * gram_off
    jac[:k, k] = d
    jac[k, :k] = d
    return jac


def newton_direction(
    ps: ProjectedState,
    gradient: np.ndarray | None = None,
    jacobian: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Solve the small Newton system for the joint step in (y, lambda)."""
    f = projected_gradient(ps) if gradient is None else gradient
    jac = projected_jacobian(ps) if jacobian is None else jacobian
    try:
        step = densela.lu_solve(jac, -f)
    except SingularMatrix as exc:
        raise SingularProjectedJacobian(ps.b_mat.cols, ps.lam, str(exc)) from exc
    return step[:-1], float(step[-1])


def merit_current(ps: ProjectedState) -> float:
    """Half the squared norm of the projected gradient at the iterate."""
    f = projected_gradient(ps)
    return 0.5 * float(f @ f)


def _merit_and_residual(
    b_bar: BidiagonalMatrix, y: np.ndarray, lam: float, beta1: float, tau_m: float
) -> tuple[float, float]:
    top, last, res_sq = _gradient_parts(b_bar, y, lam, beta1, tau_m)
    return 0.5 * (float(top @ top) + last * last), res_sq


def merit_trial(
    b_bar: BidiagonalMatrix, y_trial: np.ndarray, lam_trial: float, beta1: float, tau_m: float
) -> float:
    """Merit of a trial point, via the trailing-column matrix."""
    merit, _ = _merit_and_residual(b_bar, y_trial, lam_trial, beta1, tau_m)
    return merit


def armijo_search(
    ps: ProjectedState, dy: np.ndarray, dlam: float, opts: PntOptions
) -> tuple[float, int]:
    """Backtracking line search with the positivity safeguard on lambda.

    The initial step is 1 unless the lambda component is negative, in which
    case it is capped strictly inside the positivity bound.  Acceptance uses
    the sufficient-decrease condition in its squared-gradient form.
    """
    f = projected_gradient(ps)
    f_sq = float(f @ f)
    gamma = 1.0 if dlam >= 0 else min(1.0, -opts.eta * ps.lam / dlam)
    y_base = _pad(ps.y_bar, ps.b_merit.cols)
    dy_pad = _pad(dy, ps.b_merit.cols)
    backtracks = 0
    while True:
        if gamma < opts.min_step:
            raise StepTooSmall(f"step length {gamma:g} below {opts.min_step:g}")
        trial = merit_trial(
            ps.b_merit, y_base + gamma * dy_pad, ps.lam + gamma * dlam, ps.beta1, ps.tau_m
        )
        if trial <= (0.5 - opts.c * gamma) * f_sq:
            return gamma, backtracks
        gamma *= opts.eta
        backtracks += 1


def solve(
    problem: ProblemInstance,
    opts: PntOptions | None = None,
    *,
    observer: Callable[[IterationContext], None] | None = None,
    record_errors: bool = False,
) -> PntResult:
    """Run the projected Newton iteration on a problem instance.

    Per iteration the cost beyond the two operator products of the
    bidiagonalization is O(k^2) assembly plus an O(k^3) dense solve.  With
    ``opts.k0 > 1`` the subspace is grown for ``k0 - 1`` steps before the
    first Newton update (the delayed-start variant); ``k0 = 1`` is the
    standard method.
    """
    opts = PntOptions() if opts is None else opts
    opts.validate()
    m, n = problem.a.shape
    tau_m = opts.tau * m
    if opts.check_assumption:
        verdict = check_assumption(dataclasses.replace(problem, tau=opts.tau))
        if verdict != "holds":
            raise AssumptionViolated(f"feasibility check returned {verdict!r}")

    bd = Bidiagonalization(
        problem.a,
        problem.m_inv,
        problem.n_cov,
        problem.b,
        reorthogonalize=opts.reorthogonalize,
    )
    lam = opts.lambda0
    y = np.zeros(0)
    history: list[IterationRecord] = []
    y_snapshots: list[np.ndarray] = []
    status = "max-iters"

    for k in range(1, opts.max_iters + 1):
        if not bd.terminated and bd.k < k:
            bd.expand()
        if k < opts.k0:
            continue  # delayed start: grow the subspace only
        b_mat = bd.projection_matrix()
        b_merit = bd.merit_matrix()
        ps = ProjectedState(
            b_mat, b_merit, _pad(y, b_mat.cols), lam, bd.beta1, tau_m
        )
        f = projected_gradient(ps)
        jac = projected_jacobian(ps)
        cond = densela.condition_estimate_1norm(jac)
        dy, dlam = newton_direction(ps, gradient=f, jacobian=jac)
        try:
            gamma, backtracks = armijo_search(ps, dy, dlam, opts)
        except StepTooSmall:
            status = "step-too-small"
            break
        y = ps.y_bar + gamma * dy
        lam = ps.lam + gamma * dlam
        assert lam > 0.0, "positivity safeguard failed"
        merit_new, res_sq = _merit_and_residual(
            b_merit, _pad(y, b_merit.cols), lam, bd.beta1, tau_m
        )
        history.append(
            IterationRecord(
                k=k,
                lam=lam,
                merit_h=merit_new,
                residual_m_norm=math.sqrt(res_sq),
                gamma=gamma,
                jacobian_condition=cond,
                backtracks=backtracks,
            )
        )
        if record_errors:
            y_snapshots.append(y.copy())
        if observer is not None:
            observer(
                IterationContext(
                    k=k,
                    state=ps,
                    gradient=f,
                    jacobian=jac,
                    dy=dy,
                    dlam=dlam,
                    gamma=gamma,
                    backtracks=backtracks,
                    y_new=y.copy(),
                    lam_new=lam,
                    merit_new=merit_new,
                    residual_sq=res_sq,
                    bidiag=bd,
                    basis_cols=b_mat.cols,
                )
            )
        if abs(res_sq - tau_m) <= opts.dp_tol:
            status = "converged-dp"
            break
        if merit_new <= opts.merit_tol:
            status = "converged-merit"
            break

    if y.size:
        x = bd.basis_v(cols=y.size) @ y
    else:
        x = np.zeros(n)
    if record_errors and problem.x_true is not None:
        x_true = problem.x_true
        scale = float(np.linalg.norm(x_true))
        for record, y_k in zip(history, y_snapshots):
            x_k = bd.basis_v(cols=y_k.size) @ y_k
            record.relative_error = float(np.linalg.norm(x_k - x_true)) / scale
    return PntResult(x=x, lam=lam, mu=1.0 / lam, history=history, status=status)


def solve_delayed_start(
    problem: ProblemInstance,
    opts: PntOptions,
    *,
    observer: Callable[[IterationContext], None] | None = None,
    record_errors: bool = False,
) -> PntResult:
    """Delayed-start variant: grow the subspace for k0 - 1 steps first.

    With ``opts.k0 = 1`` this is exactly :func:`solve`.
    """
    return solve(problem, opts, observer=observer, record_errors=record_errors)
