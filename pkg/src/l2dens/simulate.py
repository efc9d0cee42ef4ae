"""Monte Carlo harness for the three analytic simulation designs.

Each design fixes a pair of closed-form arm densities, their exact squared
L2 distance, and a sampler.  Ladders run R replicates of both estimators
(initial kernel fit and targeted fit) over a schedule of per-arm sample
sizes and aggregate coverage and scaled-error metrics against the design's
efficiency bound.  Replicate r of a cell draws its generator from
SeedSequence((master_seed, design_code, n, r)), so every cell is
reproducible in isolation and replicates can run concurrently; aggregation
is an ordered reduction over the replicate index.

Error metrics are scaled by the total observation count 2n (both arms), the
scale on which they converge to the efficiency bound.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import LabeledDataset
from .densities import GaussianDensity, TriangleDensity, UniformDensity
from .estimator import estimate_l2d
from .grid import QuadGrid, build_grid
from .influence import DensityPair, efficiency_bound

__all__ = [
    "DESIGN_NAMES",
    "DEFAULT_LADDER",
    "DEFAULT_REPLICATES",
    "RESULT_COLUMNS",
    "SimDesign",
    "SimResult",
    "ReplicateOutcome",
    "make_design",
    "truth_pair",
    "sample_design",
    "replicate_seed",
    "run_replicate",
    "run_ladder",
    "write_results_csv",
]

DESIGN_NAMES = ("gaussian", "triangle", "uniform")
DEFAULT_LADDER = (50, 100, 200, 400, 800, 1600, 3200, 6400, 12800)
DEFAULT_REPLICATES = 300

RESULT_COLUMNS = (
    "design",
    "method",
    "n",
    "R",
    "coverage_oracle",
    "coverage_sample",
    "mse_n",
    "var_n",
    "eff_bound",
    "mean_rounds",
)

_DESIGN_CODES = {"gaussian": 1, "triangle": 2, "uniform": 3}


def _draw_gaussian(rng: np.random.Generator, n: int, arm: int) -> np.ndarray:
    return rng.normal(0.5 * arm, 0.5, n)


def _draw_triangle(rng: np.random.Generator, n: int, arm: int) -> np.ndarray:
    # sum of two uniforms gives the tent on [-1, 1]
    return rng.random(n) + rng.random(n) - 1.0 + 0.5 * arm


def _draw_uniform(rng: np.random.Generator, n: int, arm: int) -> np.ndarray:
    return rng.random(n) + 0.1 * arm


@dataclass(frozen=True, eq=False)
class SimDesign:
    """Analytic arm densities, exact distance, sampler, and truth grid."""

    name: str
    code: int
    p0: object
    p1: object
    true_psi: float
    truth_grid: QuadGrid
    sampler: object
    p_arm1: float = 0.5

    def sample_arm(self, rng: np.random.Generator, n: int, arm: int) -> np.ndarray:
        if arm not in (0, 1):
            raise ValueError(f"arm must be 0 or 1, got {arm}")
        return self.sampler(rng, int(n), arm)


def make_design(name: str) -> SimDesign:
    """Build one of the named designs: gaussian, triangle, or uniform.

    Truth grids are fine enough that quadrature error is negligible against
    the stated tolerances; the uniform grid places every density jump on a
    node, which makes its piecewise-constant integrals exact under the
    trapezoid rule.
    """
    if name == "gaussian":
        # int (p1 - p0)^2 = (2 / sqrt(pi)) (1 - exp(-1/4)) for two normals
        # with sd 0.5 and mean offset 0.5
        return SimDesign(
            name=name,
            code=_DESIGN_CODES[name],
            p0=GaussianDensity(0.0, 0.5),
            p1=GaussianDensity(0.5, 0.5),
            true_psi=float((2.0 / np.sqrt(np.pi)) * (1.0 - np.exp(-0.25))),
            truth_grid=build_grid((-4.0, 4.5), 17001),
            sampler=_draw_gaussian,
        )
    if name == "triangle":
        # int p0^2 = int p1^2 = 2/3, int p0 p1 = 23/48, psi = 2/3*2 - 2*23/48
        return SimDesign(
            name=name,
            code=_DESIGN_CODES[name],
            p0=TriangleDensity(0.0, 1.0),
            p1=TriangleDensity(0.5, 1.0),
            true_psi=0.375,
            truth_grid=build_grid((-1.0, 1.5), 10001),
            sampler=_draw_triangle,
        )
    if name == "uniform":
        # squared difference is 1 on two length-0.1 intervals
        return SimDesign(
            name=name,
            code=_DESIGN_CODES[name],
            p0=UniformDensity(0.0, 1.0),
            p1=UniformDensity(0.1, 1.1),
            true_psi=0.2,
            truth_grid=build_grid((-0.05, 1.15), 1201),
            sampler=_draw_uniform,
        )
    raise ValueError(f"unknown design {name!r}; choose from {DESIGN_NAMES}")


def truth_pair(design: SimDesign) -> DensityPair:
    """The design's analytic pair on its truth grid."""
    return DensityPair.build(
        design.p0, design.p1, design.p_arm1, design.truth_grid
    )


def replicate_seed(master_seed: int, design: SimDesign, n: int, r: int):
    """Deterministic per-replicate seed from (master seed, design, n, r)."""
    return np.random.SeedSequence((int(master_seed), design.code, int(n), int(r)))


def sample_design(design: SimDesign, n: int, seed) -> LabeledDataset:
    """Draw n observations per arm (arm 0 first), labels 0 then 1."""
    rng = np.random.default_rng(seed)
    x0 = design.sample_arm(rng, n, 0)
    x1 = design.sample_arm(rng, n, 1)
    points = np.concatenate([x0, x1])
    labels = np.concatenate([np.zeros(n, dtype=int), np.ones(n, dtype=int)])
    return LabeledDataset(points=points, labels=labels)


@dataclass(frozen=True)
class ReplicateOutcome:
    psi_kernel: float
    psi_tmle: float
    se_kernel: float
    se_tmle: float
    rounds: int


def run_replicate(
    design: SimDesign, n: int, master_seed: int, r: int, **estimator_options
) -> ReplicateOutcome:
    """Sample replicate r of a (design, n) cell and estimate both ways."""
    dataset = sample_design(design, n, replicate_seed(master_seed, design, n, r))
    report = estimate_l2d(dataset, **estimator_options)
    return ReplicateOutcome(
        psi_kernel=report.psi_kernel,
        psi_tmle=report.psi_tmle,
        se_kernel=report.se_kernel_fit,
        se_tmle=report.se_tmle_fit,
        rounds=report.targeting.rounds,
    )


def _cell_worker(args):
    name, n, master_seed, r, options = args
    try:
        return "ok", run_replicate(make_design(name), n, master_seed, r, **options)
    except Exception as exc:  # recorded per replicate, never fatal to the cell
        return "fail", f"{type(exc).__name__}: {exc}"


def _run_cell(design, n, replicates, master_seed, jobs, options):
    if jobs > 1:
        items = [(design.name, n, master_seed, r, options) for r in range(replicates)]
        chunk = max(1, replicates // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tagged = list(pool.map(_cell_worker, items, chunksize=chunk))
    else:
        tagged = [
            _cell_worker((design.name, n, master_seed, r, options))
            for r in range(replicates)
        ]
    outcomes = [payload for tag, payload in tagged if tag == "ok"]
    failures = [payload for tag, payload in tagged if tag == "fail"]
    return outcomes, failures


@dataclass(frozen=True)
class SimResult:
    """Aggregated metrics for one (design, method, n) cell.

    ``mse_times_n`` and ``var_times_n`` are scaled by the total observation
    count (both arms), so for an efficient method they approach
    ``efficiency_bound`` as n grows.  ``mean_rounds`` is 0 for the kernel
    rows, which involve no targeting.
    """

    design: str
    method: str
    n: int
    replicates: int
    coverage_oracle: float
    coverage_sample: float
    mse_times_n: float
    var_times_n: float
    efficiency_bound: float
    mean_rounds: float
    master_seed: int
    failures: int


def _aggregate(design, method, n, outcomes, failures, eff, level, master_seed):
    if method == "kernel":
        psis = np.array([o.psi_kernel for o in outcomes])
        ses = np.array([o.se_kernel for o in outcomes])
        mean_rounds = 0.0
    else:
        psis = np.array([o.psi_tmle for o in outcomes])
        ses = np.array([o.se_tmle for o in outcomes])
        mean_rounds = float(np.mean([o.rounds for o in outcomes]))
    z = float(norm.ppf(0.5 + 0.5 * level))
    err = psis - design.true_psi
    oracle_se = float(psis.std(ddof=1))
    n_obs = 2 * n
    return SimResult(
        design=design.name,
        method=method,
        n=n,
        replicates=len(outcomes),
        coverage_oracle=float(np.mean(np.abs(err) <= z * oracle_se)),
        coverage_sample=float(np.mean(np.abs(err) <= z * ses)),
        mse_times_n=float(n_obs * np.mean(err * err)),
        var_times_n=float(n_obs * psis.var(ddof=1)),
        efficiency_bound=eff,
        mean_rounds=mean_rounds,
        master_seed=master_seed,
        failures=len(failures),
    )


def run_ladder(
    design: SimDesign,
    n_values,
    replicates: int,
    master_seed: int,
    *,
    jobs: int = 1,
    level: float = 0.95,
    **estimator_options,
) -> list[SimResult]:
    """Run a replicate ladder and aggregate both methods per cell.

    Returns two SimResult rows (kernel, tmle) per entry of ``n_values``.
    Failed replicates are excluded from the aggregates and counted in the
    ``failures`` field; a cell needs at least 2 successes.
    """
    n_values = [int(n) for n in n_values]
    if not n_values:
        raise ValueError("n_values must be nonempty")
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    eff = efficiency_bound(truth_pair(design))
    results = []
    for n in n_values:
        outcomes, failures = _run_cell(
            design, n, replicates, master_seed, jobs, estimator_options
        )
        if len(outcomes) < 2:
            raise ValueError(
                f"cell (design={design.name}, n={n}) has {len(outcomes)} "
                f"successful replicates; first failure: {failures[0]}"
            )
        for method in ("kernel", "tmle"):
            results.append(
                _aggregate(
                    design, method, n, outcomes, failures, eff, level, master_seed
                )
            )
    return results


def write_results_csv(results, path) -> None:
    """Write SimResult rows as CSV with a fixed column set."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for res in results:
            writer.writerow(
                [
                    res.design,
                    res.method,
                    res.n,
                    res.replicates,
                    repr(res.coverage_oracle),
                    repr(res.coverage_sample),
                    repr(res.mse_times_n),
                    repr(res.var_times_n),
                    repr(res.efficiency_bound),
                    repr(res.mean_rounds),
                ]
            )
