"""Targeted update of an initial density-pair fit.

One round multiplies both arm densities by the same linear fluctuation
1 + eps * D(x, a), where D is the canonical gradient at the current fit and
eps maximizes the parametric log-likelihood sum_i log(1 + eps * d_i) over
the observed own-arm gradient values d_i.  The likelihood is strictly
concave, so the maximizer is the unique root of its score when that root is
admissible and a boundary of the admissible interval otherwise.  Rounds
repeat until the empirical mean of the gradient at the updated fit is below
sd(D) / (sqrt(n) * ln n) in absolute value, or a round cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .data import LabeledDataset
from .densities import as_points
from .influence import (
    DensityPair,
    GradientField,
    centering_constants,
    gradient_at,
    gradient_on_grid,
    gradient_values,
)

__all__ = [
    "EpsilonBounds",
    "epsilon_bounds",
    "epsilon_log_likelihood",
    "fit_epsilon",
    "FluctuatedDensity",
    "tmle_update",
    "TargetedFit",
    "tmle_targeting_loop",
]

# stands in for an unbounded side of the admissible interval
_EPS_SENTINEL = 1e6
# keeps 1 + eps * d strictly above zero at the pooled evaluation points
_EPS_MARGIN = 0.999


class EpsilonBounds(NamedTuple):
    lo: float
    hi: float
    degenerate: bool


def epsilon_bounds(values) -> EpsilonBounds:
    """Admissible epsilon interval keeping 1 + eps * d positive on ``values``.

    ``values`` should pool the gradient over both arms at every point where
    the fluctuated densities get evaluated (grid nodes and observations).
    All-zero values flag a degenerate fluctuation with sentinel bounds.
    """
    d = np.asarray(values, dtype=float)
    if d.size == 0 or not np.all(np.isfinite(d)):
        raise ValueError("gradient values must be a nonempty finite array")
    dmax = float(d.max())
    dmin = float(d.min())
    if dmax == 0.0 and dmin == 0.0:
        return EpsilonBounds(-_EPS_SENTINEL, _EPS_SENTINEL, True)
    lo = -_EPS_MARGIN / dmax if dmax > 0 else -_EPS_SENTINEL
    hi = -_EPS_MARGIN / dmin if dmin < 0 else _EPS_SENTINEL
    return EpsilonBounds(lo, hi, False)


def epsilon_log_likelihood(eps: float, d) -> float:
    """sum_i log(1 + eps * d_i); raises when any term is nonpositive."""
    d = np.asarray(d, dtype=float)
    terms = eps * d
    if terms.size and terms.min() <= -1.0:
        raise ValueError("epsilon outside the admissible range for these values")
    return float(np.log1p(terms).sum())


def fit_epsilon(d, bounds: EpsilonBounds) -> float:
    """Maximize the fluctuation log-likelihood over the admissible interval.

    The score s(eps) = sum_i d_i / (1 + eps * d_i) is strictly decreasing, so
    the maximizer is s's root inside (lo, hi) when the score changes sign and
    the corresponding endpoint otherwise.  All-zero ``d`` gives 0.
    """
    d = np.asarray(d, dtype=float)
    if bounds.degenerate or not np.any(d):
        return 0.0

    def score(eps: float) -> float:
        return float(np.sum(d / (1.0 + eps * d)))

    if score(bounds.lo) <= 0.0:
        return bounds.lo
    if score(bounds.hi) >= 0.0:
        return bounds.hi
    return float(brentq(score, bounds.lo, bounds.hi))


@dataclass(frozen=True, eq=False)
class FluctuatedDensity:
    """base(x) * (1 + epsilon * D(x, arm)) for a fixed gradient field.

    Positivity of the multiplier is guaranteed at the points pooled into the
    epsilon bounds (grid nodes and observations), not at arbitrary x.
    """

    base: object
    field: GradientField
    arm: int
    epsilon: float

    @property
    def dims(self) -> int:
        return self.base.dims

    def pdf(self, x) -> np.ndarray:
        pts = as_points(x, self.dims)
        mult = 1.0 + self.epsilon * gradient_at(self.field, pts, self.arm)
        return np.asarray(self.base.pdf(pts), dtype=float) * mult


def _fluctuation_round(
    pair: DensityPair,
    field: GradientField,
    dataset: LabeledDataset,
    p0_samples: np.ndarray,
    p1_samples: np.ndarray,
):
    """One targeting round with precomputed sample-point density values.

    Returns the updated pair, the fitted epsilon, and the sample-point values
    of the updated densities (cheap multiplier updates, no re-evaluation).
    """
    d0_grid = gradient_on_grid(field, 0)
    d1_grid = gradient_on_grid(field, 1)
    d0_samp = gradient_values(field, p0_samples, p1_samples, 0)
    d1_samp = gradient_values(field, p0_samples, p1_samples, 1)
    pooled = np.concatenate([d0_grid, d1_grid, d0_samp, d1_samp])
    bounds = epsilon_bounds(pooled)
    d_own = np.where(dataset.labels == 1, d1_samp, d0_samp)
    eps = fit_epsilon(d_own, bounds)
    if eps == 0.0:
        return pair, 0.0, p0_samples, p1_samples
    new_pair = DensityPair.build(
        FluctuatedDensity(base=pair.p0, field=field, arm=0, epsilon=eps),
        FluctuatedDensity(base=pair.p1, field=field, arm=1, epsilon=eps),
        pair.p_arm1,
        pair.grid,
        p0_grid=pair.p0_grid * (1.0 + eps * d0_grid),
        p1_grid=pair.p1_grid * (1.0 + eps * d1_grid),
    )
    return (
        new_pair,
        eps,
        p0_samples * (1.0 + eps * d0_samp),
        p1_samples * (1.0 + eps * d1_samp),
    )


def tmle_update(
    pair: DensityPair,
    field: GradientField,
    dataset: LabeledDataset,
    *,
    p0_samples=None,
    p1_samples=None,
) -> tuple[DensityPair, float]:
    """Perform a single fluctuation round and return (updated pair, epsilon).

    ``p0_samples`` / ``p1_samples`` optionally supply the arm densities
    already evaluated at ``dataset.points`` to avoid recomputation.
    """
    x = dataset.points
    p0s = np.asarray(pair.p0.pdf(x) if p0_samples is None else p0_samples, float)
    p1s = np.asarray(pair.p1.pdf(x) if p1_samples is None else p1_samples, float)
    new_pair, eps, _, _ = _fluctuation_round(pair, field, dataset, p0s, p1s)
    return new_pair, eps


@dataclass(frozen=True, eq=False)
class TargetedFit:
    """Result of the targeting loop.

    ``score`` is the empirical mean of the own-arm gradient at the final
    fit, ``score_sd`` its sample standard deviation, and ``threshold`` the
    stopping cutoff score_sd / (sqrt(n) * ln n).
    """

    pair: DensityPair
    epsilons: tuple[float, ...]
    criterion_met: bool
    score: float
    score_sd: float
    threshold: float
    max_rounds: int

    @property
    def rounds(self) -> int:
        return len(self.epsilons)

    @property
    def hit_round_cap(self) -> bool:
        """Warning flag: the loop exhausted max_rounds without stopping."""
        return not self.criterion_met and self.rounds == self.max_rounds


def tmle_targeting_loop(
    pair: DensityPair,
    dataset: LabeledDataset,
    *,
    max_rounds: int = 10,
    p0_samples=None,
    p1_samples=None,
) -> TargetedFit:
    """Iterate fluctuation rounds until the stopping criterion holds.

    At least one round always runs; the criterion is checked at the updated
    fit after each round, with n the total observation count across arms.
    ``p0_samples`` / ``p1_samples`` optionally supply the initial arm
    densities already evaluated at ``dataset.points``.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    if pair.grid.dims != dataset.dims:
        raise ValueError("dataset dimension does not match the pair's grid")
    x = dataset.points
    p0s = np.asarray(pair.p0.pdf(x) if p0_samples is None else p0_samples, float)
    p1s = np.asarray(pair.p1.pdf(x) if p1_samples is None else p1_samples, float)
    n = dataset.n
    root_n_log_n = np.sqrt(n) * np.log(n)

    field = centering_constants(pair)
    epsilons: list[float] = []
    met = False
    score = score_sd = threshold = 0.0
    for _ in range(max_rounds):
        pair, eps, p0s, p1s = _fluctuation_round(pair, field, dataset, p0s, p1s)
        epsilons.append(eps)
        field = centering_constants(pair)
        d0 = gradient_values(field, p0s, p1s, 0)
        d1 = gradient_values(field, p0s, p1s, 1)
        d_own = np.where(dataset.labels == 1, d1, d0)
        score = float(d_own.mean())
        score_sd = float(d_own.std(ddof=1))
        threshold = score_sd / root_n_log_n
        if abs(score) <= threshold:
            met = True
            break
    return TargetedFit(
        pair=pair,
        epsilons=tuple(epsilons),
        criterion_met=met,
        score=score,
        score_sd=score_sd,
        threshold=threshold,
        max_rounds=max_rounds,
    )
