"""Desk-scale inverse test problems, noise synthesis, and feasibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import densela
from .errors import AssumptionViolated, InvalidParam, InvalidSize, ZeroSignal
from .kernels import KernelSpec
from .linop import (
    LinearMap,
    PsfBlurOperator,
    SpdMap,
    blur_operator,
    covariance_spd,
    dense_operator,
    diagonal_spd,
    materialize,
    materialize_spd,
)

# Default diagonal jitter (relative to the unit kernel diagonal) for prior
# covariances of generated problems.  Large enough that desk-scale dense
# baselines can invert the covariance to ~1e-9 identity error.
DEFAULT_JITTER = 1e-5

PROBLEM_NAMES = ("heat", "shaw", "blur")


@dataclass
class NoiseSpec:
    """Relative noise level, structure, and seed."""

    level: float
    kind: str = "white"  # white | diagonal-nonwhite
    seed: int = 0

    def __post_init__(self):
        if self.level <= 0:
            raise InvalidParam("noise level must be positive")
        if self.kind not in ("white", "diagonal-nonwhite"):
            raise InvalidParam(f"unknown noise kind {self.kind!r}")


@dataclass
class ProblemInstance:
    """One inverse problem: operator, noise precision, prior, data."""

    a: LinearMap
    m_inv: SpdMap
    n_cov: SpdMap
    b: np.ndarray
    x_true: np.ndarray | None = None
    b_true: np.ndarray | None = None
    tau: float = 1.001
    name: str = ""

    def __post_init__(self):
        m, n = self.a.shape
        if self.m_inv.dim != m or self.n_cov.dim != n or self.b.size != m:
            raise InvalidParam("problem dimensions are inconsistent")
        if self.tau <= 1:
            raise InvalidParam("tau must exceed 1")


def heat_true_profile(t: np.ndarray) -> np.ndarray:
    """Reference source profile for the heat problem: a smooth bump.

    Fixed as exp(-((t - 0.4) / 0.18)^2) on [0, 1]; see the README for the
    provenance of this choice.
    """
    return np.exp(-(((t - 0.4) / 0.18) ** 2))


def heat_problem(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Causal Volterra first-kind integral operator on [0, 1].

    Midpoint quadrature of k(s, t) = (s-t)^(-3/2) / (2 sqrt(pi)) *
    exp(-1 / (4 (s-t))) for t < s (zero otherwise) on the grid
    s_i = t_i = (i - 1/2)/n, scaled by the cell width 1/n.
    """
    if n < 10:
        raise InvalidSize("heat problem needs n >= 10")
    t = (np.arange(1, n + 1) - 0.5) / n
    diff = t[:, None] - t[None, :]
    a = np.zeros((n, n))
    lower = diff > 0
    d = diff[lower]
    a[lower] = d ** (-1.5) / (2.0 * math.sqrt(math.pi)) * np.exp(-1.0 / (4.0 * d))
    a /= n
    return a, heat_true_profile(t)


def shaw_problem(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Fredholm first-kind model of 1-D image restoration on [-pi/2, pi/2].

    k(s, t) = (cos s + cos t)^2 (sin u / u)^2 with u = pi (sin s + sin t),
    taking the limit 1 at u = 0, on the midpoint grid scaled by pi/n.
    """
    if n < 10:
        raise InvalidSize("shaw problem needs n >= 10")
    if n % 2:
        raise InvalidSize("shaw problem needs even n")
    theta = (np.arange(1, n + 1) - 0.5) * math.pi / n - math.pi / 2.0
    cos_sum = np.cos(theta)[:, None] + np.cos(theta)[None, :]
    u = math.pi * (np.sin(theta)[:, None] + np.sin(theta)[None, :])
    a = cos_sum**2 * np.sinc(u / math.pi) ** 2 * (math.pi / n)
    x_true = 2.0 * np.exp(-6.0 * (theta - 0.8) ** 2) + np.exp(-2.0 * (theta + 0.5) ** 2)
    return a, x_true


def blur_phantom(side: int) -> np.ndarray:
    """Piecewise-constant test image: a rectangle and a disk, interior-supported."""
    frac = (np.arange(side) + 0.5) / side
    rows = frac[:, None]
    cols = frac[None, :]
    img = np.zeros((side, side))
    img[(rows >= 0.20) & (rows < 0.50) & (cols >= 0.25) & (cols < 0.55)] = 1.0
    disk = (rows - 0.65) ** 2 + (cols - 0.68) ** 2 <= 0.15**2
    img[disk] = 0.7
    return img.ravel()


def blur_problem(
    side: int, psf_sigma: float = 1.5, psf_radius: int = 4
) -> tuple[PsfBlurOperator, np.ndarray]:
    """Zero-padded Gaussian blur of a fixed piecewise-constant phantom."""
    if side < 16:
        raise InvalidSize("blur problem needs side >= 16")
    op = blur_operator(side, "gaussian-psf", psf_radius, psf_sigma)
    return op, blur_phantom(side)


def add_noise(b_true: np.ndarray, spec: NoiseSpec) -> tuple[np.ndarray, SpdMap]:
    """Add Gaussian noise at an exact relative level; return data and precision.

    White noise uses a single standard deviation; diagonal-nonwhite draws
    per-component scale factors log-uniformly from [0.5, 2].  In both cases
    the realized noise is rescaled so its 2-norm relative to the clean data
    equals ``spec.level`` exactly, and the returned SPD map applies the
    inverse noise covariance.
    """
    b_true = np.asarray(b_true, dtype=float)
    signal = float(np.linalg.norm(b_true))
    if signal == 0.0:
        raise ZeroSignal("clean data has zero norm")
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal(b_true.size)
    if spec.kind == "white":
        weights = np.ones(b_true.size)
    else:
        weights = np.exp(rng.uniform(math.log(0.5), math.log(2.0), b_true.size))
    raw = weights * z
    raw_norm = float(np.linalg.norm(raw))
    if raw_norm == 0.0:  # pragma: no cover - measure-zero draw
        raise ZeroSignal("degenerate noise draw")
    scale = spec.level * signal / raw_norm
    noise = scale * raw
    sigmas = scale * weights
    return b_true + noise, diagonal_spd(1.0 / sigmas**2)


def check_assumption(p: ProblemInstance) -> str:
    """Feasibility check for the noise constraint.

    Returns ``holds`` when the minimal weighted misfit lies strictly below
    tau * m and tau * m lies strictly below the weighted data norm;
    ``fails-left`` / ``fails-right`` name the violated side.
    """
    a = materialize(p.a)
    m_mat = _noise_covariance_dense(p.m_inv)
    n_mat = materialize_spd(p.n_cov)
    x_min = densela.min_norm_least_squares(a, p.b, m_mat, n_mat)
    r = a @ x_min - p.b
    min_res_sq = float(r @ p.m_inv.matvec(r))
    b_norm_sq = float(p.b @ p.m_inv.matvec(p.b))
    tau_m = p.tau * p.a.shape[0]
    if not min_res_sq < tau_m:
        return "fails-left"
    if not tau_m < b_norm_sq:
        return "fails-right"
    return "holds"


def require_assumption(p: ProblemInstance) -> None:
    verdict = check_assumption(p)
    if verdict != "holds":
        raise AssumptionViolated(f"feasibility check returned {verdict!r}")


def _noise_covariance_dense(m_inv: SpdMap) -> np.ndarray:
    """Dense noise covariance M from its inverse map."""
    if m_inv.has_inverse:
        cols = [m_inv.inv_matvec(col) for col in np.eye(m_inv.dim)]
        m = np.column_stack(cols)
        return 0.5 * (m + m.T)
    m_inv_dense = materialize_spd(m_inv)
    chol = densela.cholesky(m_inv_dense)
    import scipy.linalg

    m = scipy.linalg.cho_solve((chol, True), np.eye(m_inv.dim), check_finite=False)
    return 0.5 * (m + m.T)


def problem_points(name: str, n: int | None = None, side: int | None = None) -> np.ndarray:
    """Coordinates of the solution grid, used to build prior covariances."""
    if name == "heat":
        return ((np.arange(1, n + 1) - 0.5) / n)[:, None]
    if name == "shaw":
        return ((np.arange(1, n + 1) - 0.5) * math.pi / n - math.pi / 2.0)[:, None]
    if name == "blur":
        frac = (np.arange(side) + 0.5) / side
        rr, cc = np.meshgrid(frac, frac, indexing="ij")
        return np.column_stack([rr.ravel(), cc.ravel()])
    raise InvalidParam(f"unknown problem {name!r}")


def make_problem(
    name: str,
    *,
    n: int = 200,
    side: int = 32,
    psf_sigma: float = 1.5,
    psf_radius: int = 4,
    noise: NoiseSpec | None = None,
    kernel: KernelSpec | None = None,
    jitter: float = DEFAULT_JITTER,
    tau: float = 1.001,
) -> ProblemInstance:
    """Assemble a named test problem with noise and a kernel prior."""
    if name == "heat":
        a_mat, x_true = heat_problem(n)
        a = dense_operator(a_mat)
        kernel = kernel or KernelSpec("gaussian", 0.1)
        points = problem_points("heat", n=n)
    elif name == "shaw":
        a_mat, x_true = shaw_problem(n)
        a = dense_operator(a_mat)
        kernel = kernel or KernelSpec("exponential", 0.1, nu=1.0)
        points = problem_points("shaw", n=n)
    elif name == "blur":
        a, x_true = blur_problem(side, psf_sigma=psf_sigma, psf_radius=psf_radius)
        kernel = kernel or KernelSpec("gaussian", 0.06)
        points = problem_points("blur", side=side)
    else:
        raise InvalidParam(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")
    noise = noise or NoiseSpec(level=5e-2)
    b_true = a.matvec(x_true)
    b, m_inv = add_noise(b_true, noise)
    n_cov = covariance_spd(points, kernel, jitter)
    return ProblemInstance(
        a=a, m_inv=m_inv, n_cov=n_cov, b=b, x_true=x_true, b_true=b_true,
        tau=tau, name=name,
    )
