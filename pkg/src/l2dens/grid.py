"""Tensor-product trapezoid quadrature on uniform rectangular grids.

Integrals of the form int f(x) dx over a box [a1,b1] x ... x [ad,bd] are
approximated by sum_k w_k f(x_k) where the nodes are the tensor product of
per-axis uniform grids and the weights are the tensor product of per-axis
trapezoid weights (h/2 at the endpoints, h inside).  The rule is exact for
functions that are multilinear on each cell, and for piecewise-constant
integrands whose jump points coincide with grid nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadGrid", "build_grid", "integrate"]


@dataclass(frozen=True, eq=False)
class QuadGrid:
    """Uniform rectangular quadrature grid in 1 or 2 dimensions.

    Attributes
    ----------
    axes : tuple of ndarray
        Per-dimension node positions, each strictly increasing and uniform.
    points : ndarray, shape (npoints, dims)
        All nodes in row-major (first axis slowest) order.
    weights : ndarray, shape (npoints,)
        Trapezoid quadrature weights; nonnegative, summing to the box volume.
    """

    axes: tuple[np.ndarray, ...]
    points: np.ndarray
    weights: np.ndarray

    @property
    def dims(self) -> int:
        return len(self.axes)

    @property
    def npoints(self) -> int:
        return self.points.shape[0]

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return tuple((float(ax[0]), float(ax[-1])) for ax in self.axes)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(float(ax[1] - ax[0]) for ax in self.axes)


def _axis_weights(ax: np.ndarray) -> np.ndarray:
    h = ax[1] - ax[0]
    w = np.full(ax.shape, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


def build_grid(bounds, points_per_dim) -> QuadGrid:
    """Build a tensor-product trapezoid grid.

    Parameters
    ----------
    bounds : sequence of (lo, hi) pairs, or a single (lo, hi) pair
        Box edges per dimension.  Only 1 and 2 dimensions are supported.
    points_per_dim : int or sequence of int
        Number of nodes per axis, at least 2 each.
    """
    b = np.asarray(bounds, dtype=float)
    if b.ndim == 1:
        b = b[None, :]
    if b.ndim != 2 or b.shape[1] != 2:
        raise ValueError("bounds must be a sequence of (lo, hi) pairs")
    d = b.shape[0]
    if d not in (1, 2):
        raise ValueError(f"only 1 or 2 dimensions supported, got {d}")
    if not np.all(np.isfinite(b)):
        raise ValueError("bounds must be finite")
    if np.any(b[:, 0] >= b[:, 1]):
        raise ValueError("each (lo, hi) must satisfy lo < hi")

    npts = np.broadcast_to(np.asarray(points_per_dim, dtype=int), (d,))
    if np.any(npts < 3):
        raise ValueError("need at least 3 points per dimension")

    axes = tuple(np.linspace(b[j, 0], b[j, 1], npts[j]) for j in range(d))
    if d == 1:
        points = axes[0][:, None]
        weights = _axis_weights(axes[0])
    else:
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        points = np.column_stack([xx.ravel(), yy.ravel()])
        weights = np.outer(_axis_weights(axes[0]), _axis_weights(axes[1])).ravel()
    return QuadGrid(axes=axes, points=points, weights=weights)


def integrate(grid: QuadGrid, values) -> float:
    """Quadrature sum sum_k w_k values_k over the grid nodes."""
    v = np.asarray(values, dtype=float).ravel()
    if v.shape[0] != grid.npoints:
        raise ValueError(
            f"values has length {v.shape[0]}, grid has {grid.npoints} points"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    return float(grid.weights @ v)


def same_grid(a: QuadGrid, b: QuadGrid) -> bool:
    """True when two grids share dimension count and node positions exactly."""
    if a is b:
        return True
    if a.dims != b.dims:
        return False
    return all(
        x.shape == y.shape and np.array_equal(x, y) for x, y in zip(a.axes, b.axes)
    )
