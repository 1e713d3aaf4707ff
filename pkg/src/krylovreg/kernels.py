"""Covariance kernel functions used to build prior covariance matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam, UnsupportedNu

# Values this small are numerically zero in a covariance matrix; flushing
# them avoids subnormal slowdowns.
_FLUSH = 1e-300

_MATERN_NUS = (0.5, 1.5, 2.5)


def _flush(values):
    values = np.where(np.abs(values) < _FLUSH, 0.0, values)
    return float(values) if np.ndim(values) == 0 else values


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidParam("distances must be non-negative")
    return r


def gaussian_kernel(r, l: float):
    """Squared-exponential kernel exp(-r^2 / (2 l^2))."""
    if l <= 0:
        raise InvalidParam(f"length scale must be positive, got {l}")
    r = _check_r(r)
    return _flush(np.exp(-(r * r) / (2.0 * l * l)))


def exponential_kernel(r, l: float, nu: float):
    """Powered-exponential kernel exp(-(r/l)^nu) with 0 < nu <= 2."""
    if l <= 0:
        raise InvalidParam(f"length scale must be positive, got {l}")
    if not 0 < nu <= 2:
        raise InvalidParam(f"exponential shape must lie in (0, 2], got {nu}")
    r = _check_r(r)
    return _flush(np.exp(-((r / l) ** nu)))


def matern_kernel(r, l: float, nu: float):
    """Matern kernel, closed forms for nu in {0.5, 1.5, 2.5} only."""
    if l <= 0:
        raise InvalidParam(f"length scale must be positive, got {l}")
    if nu not in _MATERN_NUS:
        raise UnsupportedNu(f"matern nu must be one of {_MATERN_NUS}, got {nu}")
    r = _check_r(r)
    if nu == 0.5:
        val = np.exp(-r / l)
    elif nu == 1.5:
        s = math.sqrt(3.0) * r / l
        val = (1.0 + s) * np.exp(-s)
    else:
        s = math.sqrt(5.0) * r / l
        val = (1.0 + s + s * s / 3.0) * np.exp(-s)
    return _flush(val)


@dataclass(frozen=True)
class KernelSpec:
    """Parsed kernel choice: kind, length scale, and optional shape."""

    kind: str
    length_scale: float
    nu: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "exponential", "matern"):
            raise InvalidParam(f"unknown kernel kind {self.kind!r}")
        if self.length_scale <= 0:
            raise InvalidParam("length scale must be positive")
        if self.kind == "gaussian":
            if self.nu is not None:
                raise InvalidParam("gaussian kernel takes no nu parameter")
        elif self.nu is None:
            raise InvalidParam(f"{self.kind} kernel requires nu")
        elif self.kind == "exponential" and not 0 < self.nu <= 2:
            raise InvalidParam("exponential nu must lie in (0, 2]")
        elif self.kind == "matern" and self.nu not in _MATERN_NUS:
            raise UnsupportedNu(f"matern nu must be one of {_MATERN_NUS}")

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse strings like ``gaussian:l=0.1`` or ``matern:l=100,nu=1.5``."""
        head, sep, tail = text.strip().partition(":")
        kind = head.strip()
        params: dict[str, float] = {}
        if sep:
            for item in tail.split(","):
                key, eq, value = item.partition("=")
                if not eq:
                    raise InvalidParam(f"malformed kernel parameter {item!r}")
                try:
                    params[key.strip()] = float(value)
                except ValueError as exc:
                    raise InvalidParam(f"bad kernel value in {item!r}") from exc
        unknown = set(params) - {"l", "nu"}
        if unknown:
            raise InvalidParam(f"unknown kernel parameters {sorted(unknown)}")
        if "l" not in params:
            raise InvalidParam("kernel spec must set l")
        return cls(kind=kind, length_scale=params["l"], nu=params.get("nu"))

    def __call__(self, r):
        if self.kind == "gaussian":
            return gaussian_kernel(r, self.length_scale)
        if self.kind == "exponential":
            return exponential_kernel(r, self.length_scale, self.nu)
        return matern_kernel(r, self.length_scale, self.nu)

    def label(self) -> str:
        if self.nu is None:
            return f"{self.kind}:l={self.length_scale:g}"
        return f"{self.kind}:l={self.length_scale:g},nu={self.nu:g}"
