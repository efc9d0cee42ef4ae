"""Analytic densities used as simulation truths and building blocks.

Each density exposes ``dims`` and a vectorized ``pdf``.  Uniform densities
use the half-open convention (mass on [lo, hi), zero at hi and beyond) so
that quadrature on grids whose nodes include the jump points integrates
them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "as_points",
    "GaussianDensity",
    "UniformDensity",
    "TriangleDensity",
    "ProductDensity",
]


def as_points(x, dims: int) -> np.ndarray:
    """Coerce scalar / vector / matrix input to an (m, dims) point array.

    A 1-d array is read as m separate points when dims == 1 and as a single
    point when its length equals dims > 1.  Non-finite points are rejected.
    """
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("points must be finite")
    if a.ndim == 0:
        if dims != 1:
            raise ValueError(f"scalar input for a {dims}-dimensional density")
        return a.reshape(1, 1)
    if a.ndim == 1:
        if dims == 1:
            return a[:, None]
        if a.shape[0] == dims:
            return a[None, :]
        raise ValueError(f"1-d input of length {a.shape[0]} for dims={dims}")
    if a.ndim == 2:
        if a.shape[1] != dims:
            raise ValueError(f"points have {a.shape[1]} columns, expected {dims}")
        return a
    raise ValueError("points must be at most 2-dimensional")


@dataclass(frozen=True)
class GaussianDensity:
    """Univariate normal with mean ``mean`` and standard deviation ``sd``."""

    mean: float
    sd: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.sd)):
            raise ValueError("mean and sd must be finite")
        if self.sd <= 0:
            raise ValueError("sd must be positive")

    @property
    def dims(self) -> int:
        return 1

    def pdf(self, x) -> np.ndarray:
        pts = as_points(x, 1)[:, 0]
        z = (pts - self.mean) / self.sd
        return np.exp(-0.5 * z * z) / (self.sd * np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class UniformDensity:
    """Uniform on the half-open interval [lo, hi).

    Boundary comparisons use a tolerance of 1e-9 interval lengths so that
    quadrature nodes intended to sit exactly on a jump classify the same
    way despite float rounding of node positions; with jumps on nodes,
    trapezoid integrals of this density are then exact.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("lo and hi must be finite")
        if self.lo >= self.hi:
            raise ValueError("need lo < hi")

    @property
    def dims(self) -> int:
        return 1

    def pdf(self, x) -> np.ndarray:
        pts = as_points(x, 1)[:, 0]
        tol = 1e-9 * (self.hi - self.lo)
        inside = (pts >= self.lo - tol) & (pts < self.hi - tol)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)


@dataclass(frozen=True)
class TriangleDensity:
    """Symmetric tent density: peak 1/half_width at ``center``, support
    [center - half_width, center + half_width]."""

    center: float
    half_width: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.center) and np.isfinite(self.half_width)):
            raise ValueError("center and half_width must be finite")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def dims(self) -> int:
        return 1

    def pdf(self, x) -> np.ndarray:
        pts = as_points(x, 1)[:, 0]
        u = np.abs(pts - self.center) / self.half_width
        return np.maximum(0.0, 1.0 - u) / self.half_width


@dataclass(frozen=True)
class ProductDensity:
    """Independent product of univariate component densities."""

    components: tuple

    def __post_init__(self):
        if len(self.components) not in (1, 2):
            raise ValueError("only 1 or 2 components supported")
        for c in self.components:
            if c.dims != 1:
                raise ValueError("components must be univariate")

    @property
    def dims(self) -> int:
        return len(self.components)

    def pdf(self, x) -> np.ndarray:
        pts = as_points(x, self.dims)
        out = np.ones(pts.shape[0])
        for j, c in enumerate(self.components):
            out *= c.pdf(pts[:, j])
        return out
