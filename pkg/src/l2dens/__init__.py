"""Targeted estimation of the squared L2 distance between two densities.

The estimand is int (p1 - p0)^2 dx for two unknown densities observed
through labeled i.i.d. samples.  The estimator fits one kernel density per
arm, then applies likelihood-targeted fluctuation rounds along the
canonical gradient, and reports both the initial plug-in value and the
targeted value with Wald intervals from the influence-curve standard error.
"""

from .data import LabeledDataset
from .densities import (
    GaussianDensity,
    ProductDensity,
    TriangleDensity,
    UniformDensity,
)
from .estimator import (
    EstimateReport,
    estimate_l2d,
    influence_se,
    l2d_plugin,
    wald_ci,
)
from .grid import QuadGrid, build_grid, integrate
from .influence import (
    DensityPair,
    GradientField,
    centering_constants,
    efficiency_bound,
    gradient_at,
    gradient_mean_zero_check,
    gradient_on_grid,
    remainder_r2,
)
from .kde import (
    Bandwidth,
    KernelDensity,
    kde_eval,
    kde_fit,
    normal_reference_bandwidth,
    plug_in_bandwidth,
    select_bandwidth,
)
from .simulate import (
    SimDesign,
    SimResult,
    make_design,
    run_ladder,
    sample_design,
    truth_pair,
    write_results_csv,
)
from .targeting import (
    EpsilonBounds,
    FluctuatedDensity,
    TargetedFit,
    epsilon_bounds,
    epsilon_log_likelihood,
    fit_epsilon,
    tmle_targeting_loop,
    tmle_update,
)

__version__ = "0.1.0"

__all__ = [
    "LabeledDataset",
    "GaussianDensity",
    "ProductDensity",
    "TriangleDensity",
    "UniformDensity",
    "EstimateReport",
    "estimate_l2d",
    "influence_se",
    "l2d_plugin",
    "wald_ci",
    "QuadGrid",
    "build_grid",
    "integrate",
    "DensityPair",
    "GradientField",
    "centering_constants",
    "efficiency_bound",
    "gradient_at",
    "gradient_mean_zero_check",
    "gradient_on_grid",
    "remainder_r2",
    "Bandwidth",
    "KernelDensity",
    "kde_eval",
    "kde_fit",
    "normal_reference_bandwidth",
    "plug_in_bandwidth",
    "select_bandwidth",
    "SimDesign",
    "SimResult",
    "make_design",
    "run_ladder",
    "sample_design",
    "truth_pair",
    "write_results_csv",
    "EpsilonBounds",
    "FluctuatedDensity",
    "TargetedFit",
    "epsilon_bounds",
    "epsilon_log_likelihood",
    "fit_epsilon",
    "tmle_targeting_loop",
    "tmle_update",
]
