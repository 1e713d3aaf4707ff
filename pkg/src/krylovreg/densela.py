"""Dense linear algebra for small projected systems and desk-scale baselines.

All routines operate on plain float64 numpy arrays and delegate the heavy
lifting to LAPACK through numpy/scipy.  What this module adds on top is the
input validation, the failure modes, and the conventions the rest of the
library relies on (pivot thresholds, symmetry slack, weighted least squares).
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
from scipy.linalg import lapack as _lapack

from .errors import DimensionMismatch, InvalidParam, NotPositiveDefinite, SingularMatrix

# Pivots below this fraction of the largest initial column 2-norm are treated
# as exact zeros during LU factorization.
PIVOT_RTOL = 1e-14

# Relative asymmetry accepted before an SPD factorization is refused.
SYMMETRY_RTOL = 1e-12

# Up to this dimension the 1-norm condition number is computed exactly from
# the inverse; beyond it a Hager-style LAPACK estimate is used.
EXACT_CONDITION_LIMIT = 500


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={m.ndim}")
    if not np.isfinite(m).all():
        raise InvalidParam("matrix contains non-finite entries")
    return m


def _as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got ndim={v.ndim}")
    if not np.isfinite(v).all():
        raise InvalidParam("vector contains non-finite entries")
    return v


def _require_square(m: np.ndarray) -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def _lu_factor_checked(m: np.ndarray):
    """LU with partial pivoting; raises SingularMatrix on a negligible pivot."""
    col_scale = float(np.max(np.linalg.norm(m, axis=0))) if m.size else 0.0
    if col_scale == 0.0:
        raise SingularMatrix("matrix is identically zero")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= PIVOT_RTOL * col_scale:
        raise SingularMatrix(
            f"pivot below {PIVOT_RTOL:g} x max column norm ({col_scale:g})"
        )
    return lu, piv


def lu_solve(m, rhs) -> np.ndarray:
    """Solve ``m @ s = rhs`` by LU with partial pivoting.

    Raises
    ------
    SingularMatrix
        When a pivot magnitude falls below ``PIVOT_RTOL`` times the largest
        initial column 2-norm.
    """
    m = _require_square(_as_matrix(m))
    rhs = _as_vector(rhs)
    if rhs.size != m.shape[0]:
        raise DimensionMismatch(
            f"rhs length {rhs.size} does not match matrix order {m.shape[0]}"
        )
    lu, piv = _lu_factor_checked(m)
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def cholesky(m) -> np.ndarray:
    """Lower-triangular factor L with ``L @ L.T == m`` for SPD ``m``.

    Raises
    ------
    NotPositiveDefinite
        When the input is visibly asymmetric or a pivot is non-positive.
    """
    m = _require_square(_as_matrix(m))
    scale = float(np.abs(m).max()) if m.size else 0.0
    if scale == 0.0 or float(np.abs(m - m.T).max()) > SYMMETRY_RTOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric within tolerance")
    try:
        return scipy.linalg.cholesky(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - alias on new scipy
        raise NotPositiveDefinite(str(exc)) from exc


def condition_estimate_1norm(m) -> float:
    """1-norm condition number; exact below ``EXACT_CONDITION_LIMIT``.

    The large-dimension path uses the LAPACK reciprocal-condition estimator,
    which never overestimates the true condition number.
    """
    m = _require_square(_as_matrix(m))
    anorm = float(np.linalg.norm(m, 1))
    if m.shape[0] <= EXACT_CONDITION_LIMIT:
        try:
            minv = np.linalg.inv(m)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(str(exc)) from exc
        return anorm * float(np.linalg.norm(minv, 1))
    lu, _ = _lu_factor_checked(m)
    rcond, info = _lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        raise SingularMatrix("condition estimator reported a singular factor")
    return 1.0 / float(rcond)


def min_norm_least_squares(a, rhs, w_row, w_col) -> np.ndarray:
    """Weighted minimum-norm least squares.

    Returns the ``x`` minimizing ``||x||`` in the ``inv(w_col)`` norm over all
    minimizers of ``||a @ x - rhs||`` in the ``inv(w_row)`` norm.  Both weights
    must be SPD; the solve whitens with their Cholesky factors and uses a
    rank-revealing LAPACK least-squares driver.
    """
    a = _as_matrix(a)
    rhs = _as_vector(rhs)
    w_row = _as_matrix(w_row)
    w_col = _as_matrix(w_col)
    if a.shape[0] != rhs.size:
        raise DimensionMismatch("rhs length does not match row count")
    if w_row.shape != (a.shape[0], a.shape[0]):
        raise DimensionMismatch("row weight has wrong shape")
    if w_col.shape != (a.shape[1], a.shape[1]):
        raise DimensionMismatch("column weight has wrong shape")
    l_row = cholesky(w_row)
    l_col = cholesky(w_col)
    a_white = scipy.linalg.solve_triangular(l_row, a, lower=True, check_finite=False)
    rhs_white = scipy.linalg.solve_triangular(l_row, rhs, lower=True, check_finite=False)
    z, *_ = scipy.linalg.lstsq(
        a_white @ l_col, rhs_white, lapack_driver="gelsy", check_finite=False
    )
    return l_col @ z
