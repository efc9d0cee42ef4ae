"""Canonical gradient of the squared-L2 density difference.

For the functional Psi(P) = int (p1 - p0)^2 dx of a labeled-sample
distribution P with arm densities p0, p1 and label probability
q1 = P(A = 1), the efficient influence function at an observation (x, a) is

    D(x, 1) = (2 / q1)       * (p1(x) - p0(x) - c1)
    D(x, 0) = (2 / (1 - q1)) * (p0(x) - p1(x) - c0)

with centering constants c1 = int (p1 - p0) p1 dx and
c0 = int (p0 - p1) p0 dx, so that each arm term has mean zero under P and
c1 + c0 = Psi(P).  All integrals are quadrature sums on the pair's grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densities import as_points
from .grid import QuadGrid, integrate, same_grid

__all__ = [
    "DensityPair",
    "GradientField",
    "centering_constants",
    "gradient_values",
    "gradient_at",
    "gradient_on_grid",
    "gradient_mean_zero_check",
    "remainder_r2",
    "efficiency_bound",
]


@dataclass(frozen=True, eq=False)
class DensityPair:
    """Two arm densities with a shared quadrature grid and cached grid values.

    ``p0`` and ``p1`` are density objects (``dims`` attribute plus a
    vectorized ``pdf``); ``p_arm1`` is the arm-1 label probability;
    ``p0_grid`` and ``p1_grid`` are the densities evaluated at
    ``grid.points``, kept so repeated functionals of the pair cost one
    quadrature sum instead of a fresh density evaluation.
    """

    p0: object
    p1: object
    p_arm1: float
    grid: QuadGrid
    p0_grid: np.ndarray
    p1_grid: np.ndarray

    @classmethod
    def build(
        cls,
        p0,
        p1,
        p_arm1: float,
        grid: QuadGrid,
        *,
        p0_grid=None,
        p1_grid=None,
        norm_tol: float = 1e-3,
    ) -> "DensityPair":
        """Evaluate (or accept precomputed) grid values and validate the pair.

        Raises if the arm densities disagree with the grid dimension, take
        negative values on the grid, or fail to integrate to 1 within
        ``norm_tol``, or if ``p_arm1`` is outside (0, 1).
        """
        if p0.dims != grid.dims or p1.dims != grid.dims:
            raise ValueError(
                f"density dims ({p0.dims}, {p1.dims}) do not match grid dims "
                f"{grid.dims}"
            )
        if not (0.0 < p_arm1 < 1.0):
            raise ValueError(f"p_arm1 must be strictly inside (0, 1), got {p_arm1}")
        v0 = np.asarray(p0.pdf(grid.points) if p0_grid is None else p0_grid, float)
        v1 = np.asarray(p1.pdf(grid.points) if p1_grid is None else p1_grid, float)
        for name, v in (("p0", v0), ("p1", v1)):
            if v.shape != (grid.npoints,):
                raise ValueError(f"{name} grid values have shape {v.shape}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} takes non-finite values on the grid")
            if v.min() < -1e-12:
                raise ValueError(f"{name} takes negative values on the grid")
            mass = integrate(grid, v)
            if abs(mass - 1.0) > norm_tol:
                raise ValueError(
                    f"{name} integrates to {mass:.6g} on the grid, "
                    f"outside 1 +/- {norm_tol:g}; enlarge or refine the grid"
                )
        return cls(
            p0=p0, p1=p1, p_arm1=float(p_arm1), grid=grid, p0_grid=v0, p1_grid=v1
        )


@dataclass(frozen=True, eq=False)
class GradientField:
    """A density pair together with its gradient centering constants."""

    pair: DensityPair
    c1: float
    c0: float


def centering_constants(pair: DensityPair) -> GradientField:
    """Compute c1 = int (p1 - p0) p1 and c0 = int (p0 - p1) p0 on the grid."""
    diff = pair.p1_grid - pair.p0_grid
    c1 = integrate(pair.grid, diff * pair.p1_grid)
    c0 = integrate(pair.grid, -diff * pair.p0_grid)
    return GradientField(pair=pair, c1=c1, c0=c0)


def gradient_values(
    field: GradientField, p0_vals: np.ndarray, p1_vals: np.ndarray, arm: int
) -> np.ndarray:
    """Gradient at points whose arm densities are already evaluated."""
    if arm == 1:
        return (2.0 / field.pair.p_arm1) * (p1_vals - p0_vals - field.c1)
    if arm == 0:
        return (2.0 / (1.0 - field.pair.p_arm1)) * (p0_vals - p1_vals - field.c0)
    raise ValueError(f"arm must be 0 or 1, got {arm}")


def gradient_at(field: GradientField, x, arm: int) -> np.ndarray:
    """Evaluate the gradient D(x, arm) at arbitrary points."""
    pts = as_points(x, field.pair.grid.dims)
    p0_vals = field.pair.p0.pdf(pts)
    p1_vals = field.pair.p1.pdf(pts)
    return gradient_values(field, p0_vals, p1_vals, arm)


def gradient_on_grid(field: GradientField, arm: int) -> np.ndarray:
    """Gradient at the grid nodes, from the pair's cached grid values."""
    return gradient_values(field, field.pair.p0_grid, field.pair.p1_grid, arm)


def gradient_mean_zero_check(field: GradientField) -> tuple[float, float]:
    """Per-arm means (int D(x, 0) p0 dx, int D(x, 1) p1 dx), both ~ 0."""
    g = field.pair.grid
    m0 = integrate(g, gradient_on_grid(field, 0) * field.pair.p0_grid)
    m1 = integrate(g, gradient_on_grid(field, 1) * field.pair.p1_grid)
    return m0, m1


def remainder_r2(pair: DensityPair, truth: DensityPair) -> float:
    """Second-order remainder -int ((p1t - p0t) - (p1 - p0))^2 dx.

    Both pairs must share the same grid; the value is nonpositive by
    construction.
    """
    if not same_grid(pair.grid, truth.grid):
        raise ValueError("pair and truth must share the same quadrature grid")
    gap = (truth.p1_grid - truth.p0_grid) - (pair.p1_grid - pair.p0_grid)
    return -integrate(pair.grid, gap * gap)


def efficiency_bound(pair: DensityPair) -> float:
    """Variance of the gradient under the pair's own law.

    Var D = q1 int D(x,1)^2 p1 dx + (1 - q1) int D(x,0)^2 p0 dx; this is the
    asymptotic variance of an efficient estimator when the pair is the truth.
    """
    g = pair.grid
    field = centering_constants(pair)
    d1 = gradient_on_grid(field, 1)
    d0 = gradient_on_grid(field, 0)
    v1 = integrate(g, d1 * d1 * pair.p1_grid)
    v0 = integrate(g, d0 * d0 * pair.p0_grid)
    return pair.p_arm1 * v1 + (1.0 - pair.p_arm1) * v0
