"""Golub-Kahan bidiagonalization between weighted inner-product spaces.

The recurrence treats the forward operator as a map from an n-space with
inner product ``<x, x'> = x' inv(N) x`` to an m-space with inner product
``<y, y'> = y' inv(M) y``.  It needs only products with A, its transpose,
inv(M) and N; the inverse of N is never applied.  Alongside each basis
vector u and v the recurrence keeps the "bar" companions
``ubar = inv(M) u`` and ``vbar = inv(N) v`` (the latter maintained purely by
recurrence), which make the weighted inner products cheap and allow full
reorthogonalization without extra operator applies.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    AlreadyTerminated,
    BreakdownAtInit,
    NotEnoughSteps,
    ZeroVector,
)
from .linop import LinearMap, SpdMap

# Coefficients at or below breakdown_rtol * max(alpha1, beta1) end the
# recurrence; the Krylov space has stopped growing.
BREAKDOWN_RTOL = 1e-12


class BidiagonalMatrix:
    """Lower bidiagonal matrix stored by its diagonal and subdiagonal.

    Shapes are either square (``rows == cols``) or tall by one row
    (``rows == cols + 1``).  Products cost O(cols).
    """

    def __init__(self, diag: np.ndarray, sub: np.ndarray, rows: int):
        self.diag = np.asarray(diag, dtype=float)
        self.sub = np.asarray(sub, dtype=float)
        self.cols = self.diag.size
        self.rows = int(rows)
        if self.rows not in (self.cols, self.cols + 1):
            raise ValueError("rows must equal cols or cols + 1")
        expected_sub = self.cols if self.rows == self.cols + 1 else self.cols - 1
        if self.sub.size != expected_sub:
            raise ValueError("subdiagonal length inconsistent with shape")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def matvec(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros(self.rows)
        out[: self.cols] = self.diag * y
        k = self.sub.size
        out[1 : 1 + k] += self.sub * y[:k]
        return out

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        out = self.diag * w[: self.cols]
        k = self.sub.size
        out[:k] += self.sub * w[1 : 1 + k]
        return out

    def gram_tridiagonal(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and superdiagonal of B' B (symmetric tridiagonal)."""
        d = self.diag * self.diag
        k = self.sub.size
        d[:k] += self.sub * self.sub
        off = self.sub[: self.cols - 1] * self.diag[1 : self.cols]
        return d, off

    def dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        idx = np.arange(self.cols)
        out[idx, idx] = self.diag
        k = self.sub.size
        out[np.arange(1, 1 + k), np.arange(k)] = self.sub
        return out


class Bidiagonalization:
    """State of the weighted bidiagonalization of (A, inv(M), N) seeded by b.

    Single-writer: ``expand`` mutates the state and must not be called
    concurrently; read-only snapshots may be shared freely between steps.
    """

    def __init__(
        self,
        a: LinearMap,
        m_inv: SpdMap,
        n_cov: SpdMap,
        b: np.ndarray,
        *,
        reorthogonalize: bool = True,
        breakdown_tol: float | None = None,
    ):
        b = np.asarray(b, dtype=float)
        if b.size != a.shape[0] or float(np.linalg.norm(b)) == 0.0:
            if b.size != a.shape[0]:
                raise ZeroVector(f"b has length {b.size}, operator expects {a.shape[0]}")
            raise ZeroVector("starting vector b is zero")
        self._a = a
        self._m_inv = m_inv
        self._n_cov = n_cov
        self.reorthogonalize = bool(reorthogonalize)

        sbar = m_inv.matvec(b)
        beta1 = math.sqrt(max(float(sbar @ b), 0.0))
        if beta1 == 0.0:
            raise ZeroVector("b has zero norm in the inv(M) inner product")
        u1 = b / beta1
        ubar1 = sbar / beta1
        rbar = a.rmatvec(ubar1)
        r = n_cov.matvec(rbar)
        alpha1 = math.sqrt(max(float(r @ rbar), 0.0))
        self.breakdown_tol = (
            breakdown_tol
            if breakdown_tol is not None
            else BREAKDOWN_RTOL * max(alpha1, beta1)
        )
        if alpha1 <= self.breakdown_tol:
            raise BreakdownAtInit(
                "first coefficient vanished: b generates no Krylov direction"
            )
        self.alphas = [alpha1]
        self.betas = [beta1]
        self._u = [u1]
        self._ubar = [ubar1]
        self._v = [r / alpha1]
        self._vbar = [rbar / alpha1]
        self.k = 0  # completed expansion steps
        self.terminated = False
        self.breakdown: str | None = None  # 'alpha' | 'beta' once terminated
        self.breakdown_value: float | None = None

    @property
    def beta1(self) -> float:
        return self.betas[0]

    @property
    def termination_step(self) -> int | None:
        """Index of the last step with both coefficients nonzero, if reached."""
        return self.k + 1 if self.terminated else None

    def expand(self) -> None:
        """Run one recurrence step; flips ``terminated`` on breakdown."""
        if self.terminated:
            raise AlreadyTerminated("bidiagonalization already terminated")
        a, m_inv, n_cov = self._a, self._m_inv, self._n_cov

        s = a.matvec(self._v[-1]) - self.alphas[-1] * self._u[-1]
        sbar = m_inv.matvec(s)
        if self.reorthogonalize:
            for u, ubar in zip(self._u, self._ubar):
                c = float(ubar @ s)
                s = s - c * u
                sbar = sbar - c * ubar
        beta_new = math.sqrt(max(float(s @ sbar), 0.0))
        if beta_new <= self.breakdown_tol:
            self.terminated = True
            self.breakdown = "beta"
            self.breakdown_value = beta_new
            return
        u_new = s / beta_new
        ubar_new = sbar / beta_new
        self.betas.append(beta_new)
        self._u.append(u_new)
        self._ubar.append(ubar_new)

        rbar = a.rmatvec(ubar_new) - beta_new * self._vbar[-1]
        if self.reorthogonalize:
            for v, vbar in zip(self._v, self._vbar):
                c = float(v @ rbar)
                rbar = rbar - c * vbar
        r = n_cov.matvec(rbar)
        alpha_new = math.sqrt(max(float(r @ rbar), 0.0))
        if alpha_new <= self.breakdown_tol:
            self.terminated = True
            self.breakdown = "alpha"
            self.breakdown_value = alpha_new
            return
        self.alphas.append(alpha_new)
        self._v.append(r / alpha_new)
        self._vbar.append(rbar / alpha_new)
        self.k += 1

    # -- snapshots -----------------------------------------------------------

    def _solution_cols(self) -> int:
        return self.termination_step if self.terminated else self.k

    def basis_u(self) -> np.ndarray:
        return np.column_stack(self._u)

    def basis_v(self, cols: int | None = None) -> np.ndarray:
        if cols is None:
            cols = self._solution_cols()
        return np.column_stack(self._v[:cols]) if cols else np.zeros((self._n(), 0))

    def basis_v_bar(self, cols: int | None = None) -> np.ndarray:
        if cols is None:
            cols = self._solution_cols()
        return np.column_stack(self._vbar[:cols]) if cols else np.zeros((self._n(), 0))

    def _n(self) -> int:
        return self._a.shape[1]

    def basis_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Column-stacked bases (U, V) paired with the projection matrix.

        Before termination U has k+1 columns and V has k; after termination V
        is capped at the termination step.
        """
        return self.basis_u(), self.basis_v()

    def projection_matrix(self) -> BidiagonalMatrix:
        """The bidiagonal matrix pairing A with the current bases.

        Tall (k+1) x k while the recurrence runs; after termination it is
        square when the row-side coefficient vanished first and stays tall
        when the column side vanished.
        """
        if self.k == 0 and not self.terminated:
            raise NotEnoughSteps("no expansion step has completed")
        if not self.terminated:
            k = self.k
            return BidiagonalMatrix(self.alphas[:k], self.betas[1 : k + 1], rows=k + 1)
        kt = self.termination_step
        if self.breakdown == "beta":
            return BidiagonalMatrix(self.alphas[:kt], self.betas[1:kt], rows=kt)
        return BidiagonalMatrix(self.alphas[:kt], self.betas[1 : kt + 1], rows=kt + 1)

    def merit_matrix(self) -> BidiagonalMatrix:
        """The square trailing-column extension used for trial merits.

        While the recurrence runs this appends the freshly computed diagonal
        coefficient as an extra column; after termination it coincides with
        the projection matrix.
        """
        if self.k == 0 and not self.terminated:
            raise NotEnoughSteps("no expansion step has completed")
        if self.terminated:
            return self.projection_matrix()
        k = self.k
        return BidiagonalMatrix(
            self.alphas[: k + 1], self.betas[1 : k + 1], rows=k + 1
        )
