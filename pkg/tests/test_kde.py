import numpy as np
import pytest

from l2dens.grid import build_grid, integrate
from l2dens.kde import (
    Bandwidth,
    KernelDensity,
    _psi_binned,
    _psi_exact,
    kde_eval,
    kde_fit,
    normal_reference_bandwidth,
    plug_in_bandwidth,
    select_bandwidth,
)


def _standardized(rng, n):
    x = rng.normal(size=n)
    return (x - x.mean()) / x.std(ddof=1)


def test_normal_reference_formula_1d():
    x = _standardized(np.random.default_rng(1), 100)
    bw = normal_reference_bandwidth(x)
    assert bw.selector == "normal_reference"
    assert bw.h[0] == pytest.approx((4.0 / 300.0) ** 0.2, rel=1e-10)
    assert bw.h[0] == pytest.approx(0.4217, abs=2e-3)


def test_normal_reference_scale_equivariance():
    x = _standardized(np.random.default_rng(2), 100)
    h1 = normal_reference_bandwidth(x).h[0]
    h2 = normal_reference_bandwidth(2.0 * x).h[0]
    assert h2 == pytest.approx(2.0 * h1, rel=1e-12)


def test_normal_reference_formula_2d():
    rng = np.random.default_rng(3)
    x = np.column_stack([_standardized(rng, 100), _standardized(rng, 100)])
    bw = normal_reference_bandwidth(x)
    expected = (4.0 / 400.0) ** (1.0 / 6.0)
    np.testing.assert_allclose(bw.h, [expected, expected], rtol=1e-10)
    assert expected == pytest.approx(0.4642, abs=1e-4)


def test_degenerate_dimension_named():
    x = np.column_stack([np.ones(50), np.arange(50.0)])
    with pytest.raises(ValueError, match="dimension 0"):
        normal_reference_bandwidth(x)
    with pytest.raises(ValueError, match="dimension 0"):
        plug_in_bandwidth(x)


def test_plug_in_close_to_normal_reference_on_gaussian():
    x = np.random.default_rng(4).normal(size=10_000)
    h_pi = plug_in_bandwidth(x).h[0]
    h_nr = normal_reference_bandwidth(x).h[0]
    assert abs(h_pi - h_nr) / h_nr < 0.15


def test_plug_in_scale_equivariance():
    x = np.random.default_rng(5).normal(size=500)
    h1 = plug_in_bandwidth(x).h[0]
    h2 = plug_in_bandwidth(2.0 * x).h[0]
    assert h2 == pytest.approx(2.0 * h1, rel=1e-12)
    # the binned functional path must be equivariant too
    xl = np.random.default_rng(6).normal(size=5000)
    assert plug_in_bandwidth(2.0 * xl).h[0] == pytest.approx(
        2.0 * plug_in_bandwidth(xl).h[0], rel=1e-12
    )


def test_plug_in_adapts_to_bimodality():
    rng = np.random.default_rng(7)
    x = np.concatenate([rng.normal(-3.0, 1.0, 5000), rng.normal(3.0, 1.0, 5000)])
    assert plug_in_bandwidth(x).h[0] < normal_reference_bandwidth(x).h[0]


def test_plug_in_needs_four_points():
    with pytest.raises(ValueError, match="at least 4"):
        plug_in_bandwidth(np.array([0.0, 1.0, 2.0]))


def test_binned_functional_matches_exact():
    x = np.random.default_rng(8).normal(size=1500)
    for r, g in ((4, 0.3), (6, 0.5)):
        exact = _psi_exact(x, g, r)
        binned = _psi_binned(x, g, r)
        assert binned == pytest.approx(exact, rel=5e-3)


def test_single_kernel_peak():
    d = kde_fit(np.array([0.0]), Bandwidth(h=[1.0]))
    assert d.pdf(0.0)[0] == pytest.approx(1.0 / np.sqrt(2 * np.pi), rel=1e-12)


def test_two_kernel_symmetry_point():
    d = kde_fit(np.array([-1.0, 1.0]), Bandwidth(h=[1.0]))
    phi1 = np.exp(-0.5) / np.sqrt(2 * np.pi)
    assert d.pdf(0.0)[0] == pytest.approx(phi1, rel=1e-12)
    assert d.pdf(0.0)[0] == pytest.approx(0.24197, abs=1e-5)


def test_kde_normalization_and_positivity():
    rng = np.random.default_rng(9)
    x = rng.normal(2.0, 1.5, 400)
    bw = plug_in_bandwidth(x)
    d = kde_fit(x, bw)
    pad = 6.0 * bw.h[0]
    g = build_grid((x.min() - pad, x.max() + pad), 2001)
    vals = d.pdf(g.points)
    assert integrate(g, vals) == pytest.approx(1.0, abs=1e-3)
    assert np.all(vals > 0)


def test_kde_normalization_2d():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(300, 2))
    bw = plug_in_bandwidth(x)
    d = kde_fit(x, bw)
    bounds = [
        (x[:, j].min() - 6 * bw.h[j], x[:, j].max() + 6 * bw.h[j]) for j in range(2)
    ]
    g = build_grid(bounds, 201)
    assert integrate(g, d.pdf(g.points)) == pytest.approx(1.0, abs=1e-3)


def test_translation_equivariance():
    rng = np.random.default_rng(11)
    x = rng.normal(size=200)
    bw = Bandwidth(h=[0.4])
    q = np.linspace(-3, 3, 50)
    base = kde_fit(x, bw).pdf(q)
    shifted = kde_fit(x + 1.25, bw).pdf(q + 1.25)
    np.testing.assert_allclose(shifted, base, atol=1e-12)


def test_chunked_evaluation_matches_direct():
    rng = np.random.default_rng(12)
    x = rng.normal(size=(57, 2))
    h = np.array([0.3, 0.7])
    d = kde_fit(x, Bandwidth(h=h))
    q = rng.normal(size=(23, 2))
    # direct product-kernel sum, no chunking tricks
    z0 = (q[:, None, 0] - x[None, :, 0]) / h[0]
    z1 = (q[:, None, 1] - x[None, :, 1]) / h[1]
    direct = np.exp(-0.5 * (z0**2 + z1**2)).sum(axis=1) / (
        len(x) * h.prod() * 2 * np.pi
    )
    np.testing.assert_allclose(d.pdf(q), direct, rtol=1e-12)


def test_grid_error_shrinks_with_n():
    from l2dens.simulate import make_design, sample_design

    design = make_design("gaussian")
    g = build_grid((-2.5, 2.5), 2001)
    truth = design.p0.pdf(g.points)
    errs = {}
    for n in (800, 12800):
        ds = sample_design(design, n, seed=13)
        x0 = ds.arm(0)
        fit = kde_fit(x0, plug_in_bandwidth(x0))
        diff = fit.pdf(g.points) - truth
        errs[n] = integrate(g, diff * diff)
    assert errs[12800] < errs[800]


def test_kde_eval_rejects_non_finite():
    d = kde_fit(np.array([0.0, 1.0]), Bandwidth(h=[1.0]))
    with pytest.raises(ValueError, match="finite"):
        kde_eval(d, [np.inf])


def test_bandwidth_validation():
    with pytest.raises(ValueError):
        Bandwidth(h=[0.0])
    with pytest.raises(ValueError):
        Bandwidth(h=[1.0, np.nan])
    with pytest.raises(ValueError):
        Bandwidth(h=[1.0], selector="adaptive")
    with pytest.raises(ValueError):
        Bandwidth(h=[1.0, 1.0, 1.0])


def test_select_bandwidth_dispatch():
    x = np.random.default_rng(14).normal(size=100)
    assert select_bandwidth(x, "plug_in").selector == "plug_in"
    assert select_bandwidth(x, "normal_reference").selector == "normal_reference"
    with pytest.raises(ValueError, match="unknown selector"):
        select_bandwidth(x, "silverman")


def test_kernel_density_dim_mismatch():
    with pytest.raises(ValueError):
        KernelDensity(points=np.zeros((5, 2)), bandwidth=Bandwidth(h=[1.0]))
