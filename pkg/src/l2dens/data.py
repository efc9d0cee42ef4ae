"""Labeled two-sample data: observation coordinates plus 0/1 arm labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kde import sample_matrix

__all__ = ["LabeledDataset"]


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Pooled observations (n, d) with arm labels (n,) in {0, 1}.

    Both arms must contribute at least 2 observations; coordinates must be
    finite; 1 or 2 coordinate dimensions are supported.
    """

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = sample_matrix(self.points)
        a = np.asarray(self.labels)
        if a.ndim != 1 or a.shape[0] != x.shape[0]:
            raise ValueError("labels must be a vector matching the number of rows")
        if not np.all(np.isin(a, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        a = a.astype(np.int64)
        n1 = int(a.sum())
        n0 = a.shape[0] - n1
        if n0 < 2 or n1 < 2:
            raise ValueError(
                f"each arm needs at least 2 observations, got n0={n0}, n1={n1}"
            )
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "labels", a)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def n1(self) -> int:
        return int(self.labels.sum())

    @property
    def n0(self) -> int:
        return self.n - self.n1

    @property
    def label_share(self) -> float:
        """Empirical share of arm-1 observations."""
        return self.n1 / self.n

    def arm(self, a: int) -> np.ndarray:
        """Coordinate rows belonging to arm ``a``."""
        return self.points[self.labels == a]
