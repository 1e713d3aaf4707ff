"""Matrix-free operator abstractions and the concrete operators used in tests.

A :class:`LinearMap` only promises forward and transpose products; a
:class:`SpdMap` promises a symmetric positive definite product and optionally
its inverse.  The solver path never applies the inverse of a prior covariance:
it is exposed only so desk-scale baselines can factor small problems.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg
import scipy.ndimage

from .errors import (
    DimensionMismatch,
    InvalidParam,
    InvalidPsf,
    InvalidSize,
    NonPositiveEntry,
    NotPositiveDefinite,
    TooLarge,
)
from .kernels import KernelSpec

# Dense materialization refuses matrices beyond this entry count.
MATERIALIZE_GUARD = 4_000_000


class LinearMap:
    """Matrix-free m x n linear operator with forward and transpose products."""

    def __init__(
        self,
        shape: tuple[int, int],
        matvec: Callable[[np.ndarray], np.ndarray],
        rmatvec: Callable[[np.ndarray], np.ndarray],
        dense: np.ndarray | None = None,
    ):
        self.shape = (int(shape[0]), int(shape[1]))
        self._matvec = matvec
        self._rmatvec = rmatvec
        self._dense = dense

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.shape[1],):
            raise DimensionMismatch(
                f"matvec expects length {self.shape[1]}, got {x.shape}"
            )
        return self._matvec(x)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.shape[0],):
            raise DimensionMismatch(
                f"rmatvec expects length {self.shape[0]}, got {y.shape}"
            )
        return self._rmatvec(y)

    def to_dense(self) -> np.ndarray | None:
        """Dense backing array when one exists, else None."""
        return self._dense


class SpdMap:
    """Symmetric positive definite operator; inverse product is optional."""

    def __init__(
        self,
        dim: int,
        matvec: Callable[[np.ndarray], np.ndarray],
        inv_matvec: Callable[[np.ndarray], np.ndarray] | None = None,
        dense: np.ndarray | None = None,
    ):
        self.dim = int(dim)
        self._matvec = matvec
        self._inv_matvec = inv_matvec
        self._dense = dense

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"matvec expects length {self.dim}, got {x.shape}")
        return self._matvec(x)

    @property
    def has_inverse(self) -> bool:
        return self._inv_matvec is not None

    def inv_matvec(self, x: np.ndarray) -> np.ndarray:
        if self._inv_matvec is None:
            raise NotPositiveDefinite("no inverse product available for this operator")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(
                f"inv_matvec expects length {self.dim}, got {x.shape}"
            )
        return self._inv_matvec(x)

    def to_dense(self) -> np.ndarray | None:
        return self._dense

    def as_linear_map(self) -> LinearMap:
        return LinearMap((self.dim, self.dim), self.matvec, self.matvec, self._dense)


def dense_operator(m) -> LinearMap:
    """Wrap a dense matrix as a LinearMap."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch("dense_operator expects a 2-D array")
    return LinearMap(m.shape, lambda x: m @ x, lambda y: m.T @ y, dense=m)


def diagonal_spd(d) -> SpdMap:
    """SPD map that scales componentwise by a positive vector."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 1:
        raise DimensionMismatch("diagonal_spd expects a vector")
    if np.any(d <= 0) or not np.isfinite(d).all():
        raise NonPositiveEntry("diagonal entries must be positive and finite")
    return SpdMap(d.size, lambda x: d * x, lambda x: x / d, dense=np.diag(d))


DEFAULT_COVARIANCE_JITTER = 1e-10


def covariance_spd(points, kernel: KernelSpec, jitter: float = DEFAULT_COVARIANCE_JITTER) -> SpdMap:
    """Dense covariance operator from a kernel over pairwise distances.

    Kernel matrices at fine discretizations are numerically semidefinite, so
    a small diagonal jitter is added.  The inverse product becomes available
    lazily, and only if a Cholesky factorization of the assembled matrix
    succeeds.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 1 and pts.shape[1] > 1 and np.ndim(points) == 1:
        pts = pts.T  # a flat list of scalars is a column of 1-D points
    if pts.size == 0:
        raise InvalidParam("points must be nonempty")
    if jitter < 0:
        raise InvalidParam("jitter must be non-negative")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    n_mat = np.asarray(kernel(dist), dtype=float)
    n_mat[np.diag_indices_from(n_mat)] += jitter
    n_mat = 0.5 * (n_mat + n_mat.T)

    factor: list[np.ndarray | None] = [None]

    def inv_matvec(x: np.ndarray) -> np.ndarray:
        if factor[0] is None:
            from .densela import cholesky

            factor[0] = cholesky(n_mat)  # NotPositiveDefinite propagates
        return scipy.linalg.cho_solve((factor[0], True), x, check_finite=False)

    return SpdMap(n_mat.shape[0], lambda x: n_mat @ x, inv_matvec, dense=n_mat)


class PsfBlurOperator(LinearMap):
    """Zero-padded 2-D convolution with a small normalized stencil."""

    def __init__(self, side: int, psf: np.ndarray):
        self.side = int(side)
        self.psf = np.asarray(psf, dtype=float)
        n = self.side * self.side
        super().__init__((n, n), self._apply, self._apply_transpose)

    def _apply(self, x: np.ndarray) -> np.ndarray:
        img = x.reshape(self.side, self.side)
        out = scipy.ndimage.convolve(img, self.psf, mode="constant", cval=0.0)
        return out.ravel()

    def _apply_transpose(self, y: np.ndarray) -> np.ndarray:
        img = y.reshape(self.side, self.side)
        out = scipy.ndimage.correlate(img, self.psf, mode="constant", cval=0.0)
        return out.ravel()


def blur_operator(
    side: int, psf_kind: str = "gaussian-psf", psf_radius: int = 4, psf_sigma: float = 1.5
) -> PsfBlurOperator:
    """Gaussian-stencil blur on a side x side image with zero padding."""
    if psf_kind != "gaussian-psf":
        raise InvalidPsf(f"unknown psf kind {psf_kind!r}")
    if psf_sigma <= 0:
        raise InvalidPsf(f"psf sigma must be positive, got {psf_sigma}")
    if psf_radius < 0:
        raise InvalidPsf("psf radius must be non-negative")
    if side < 2 * psf_radius + 1:
        raise InvalidSize(f"side {side} too small for psf radius {psf_radius}")
    offsets = np.arange(-psf_radius, psf_radius + 1, dtype=float)
    sq = offsets[:, None] ** 2 + offsets[None, :] ** 2
    psf = np.exp(-sq / (2.0 * psf_sigma * psf_sigma))
    psf /= psf.sum()
    return PsfBlurOperator(side, psf)


def materialize(op: LinearMap) -> np.ndarray:
    """Dense matrix of a LinearMap; column j is the image of basis vector j."""
    m, n = op.shape
    if m * n > MATERIALIZE_GUARD:
        raise TooLarge(f"{m} x {n} exceeds the {MATERIALIZE_GUARD}-entry guard")
    dense = op.to_dense()
    if dense is not None:
        return np.array(dense, dtype=float)
    out = np.empty((m, n))
    unit = np.zeros(n)
    for j in range(n):
        unit[j] = 1.0
        out[:, j] = op.matvec(unit)
        unit[j] = 0.0
    return out


def materialize_spd(op: SpdMap) -> np.ndarray:
    """Dense matrix of an SpdMap, symmetrized."""
    dense = materialize(op.as_linear_map())
    return 0.5 * (dense + dense.T)


def read_coordinate_matrix(path) -> np.ndarray:
    """Load a dense matrix from coordinate-list text.

    Format: a header line ``rows cols nnz`` followed by ``nnz`` lines of
    ``row col value`` with 1-based indices.  Lines starting with ``#`` and
    blank lines are ignored; duplicate entries accumulate.
    """
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InvalidParam(f"{path}: empty coordinate file")
    head = lines[0].split()
    if len(head) != 3:
        raise InvalidParam(f"{path}: header must be 'rows cols nnz'")
    try:
        rows, cols, nnz = (int(tok) for tok in head)
    except ValueError as exc:
        raise InvalidParam(f"{path}: bad header {lines[0]!r}") from exc
    if rows <= 0 or cols <= 0 or nnz < 0:
        raise InvalidParam(f"{path}: non-positive dimensions in header")
    if len(lines) - 1 != nnz:
        raise InvalidParam(f"{path}: header promises {nnz} entries, found {len(lines) - 1}")
    for ln in lines[1:]:
        tok = ln.split()
        if len(tok) != 3:
            raise InvalidParam(f"{path}: malformed entry {ln!r}")
        try:
            i, j, v = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError as exc:
            raise InvalidParam(f"{path}: malformed entry {ln!r}") from exc
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise InvalidParam(f"{path}: index out of range in {ln!r}")
        entries.append((i - 1, j - 1, v))
    out = np.zeros((rows, cols))
    for i, j, v in entries:
        out[i, j] += v
    return out
