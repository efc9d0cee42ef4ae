import csv

import numpy as np
import pytest
from scipy.stats import norm

from l2dens.estimator import l2d_plugin
from l2dens.grid import build_grid, integrate
from l2dens.influence import efficiency_bound
from l2dens.simulate import (
    DEFAULT_LADDER,
    DESIGN_NAMES,
    RESULT_COLUMNS,
    make_design,
    replicate_seed,
    run_ladder,
    run_replicate,
    sample_design,
    truth_pair,
    write_results_csv,
)


class TestDesigns:
    def test_names(self):
        assert DESIGN_NAMES == ("gaussian", "triangle", "uniform")
        for name in DESIGN_NAMES:
            d = make_design(name)
            assert d.name == name
            assert d.p_arm1 == 0.5

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown design"):
            make_design("cauchy")

    def test_true_psi_values(self):
        assert make_design("gaussian").true_psi == pytest.approx(
            (2.0 / np.sqrt(np.pi)) * (1.0 - np.exp(-0.25)), rel=1e-15
        )
        assert make_design("triangle").true_psi == 0.375
        assert make_design("uniform").true_psi == 0.2

    def test_truth_grid_quadrature_matches_psi(self):
        for name, tol in (("gaussian", 1e-9), ("triangle", 1e-6), ("uniform", 1e-12)):
            d = make_design(name)
            assert l2d_plugin(truth_pair(d)) == pytest.approx(d.true_psi, abs=tol)

    def test_triangle_psi_against_fine_grid(self):
        d = make_design("triangle")
        g = build_grid((-1.0, 1.5), 250001)
        diff = d.p1.pdf(g.points) - d.p0.pdf(g.points)
        assert integrate(g, diff * diff) == pytest.approx(0.375, abs=1e-9)

    def test_uniform_efficiency_bound(self):
        assert efficiency_bound(truth_pair(make_design("uniform"))) == pytest.approx(
            1.44, abs=1e-9
        )

    def test_distinct_design_codes(self):
        codes = {make_design(n).code for n in DESIGN_NAMES}
        assert len(codes) == 3


def _tent_cdf(x, center):
    u = np.clip(x - center, -1.0, 1.0)
    return np.where(u <= 0.0, 0.5 * (1.0 + u) ** 2, 1.0 - 0.5 * (1.0 - u) ** 2)


class TestSamplers:
    M = 100_000

    def _draws(self, name, arm):
        d = make_design(name)
        return d.sample_arm(np.random.default_rng(61), self.M, arm)

    def test_gaussian_marginals(self):
        for arm in (0, 1):
            x = np.sort(self._draws("gaussian", arm))
            ecdf = np.arange(1, self.M + 1) / self.M
            truth = norm.cdf(x, loc=0.5 * arm, scale=0.5)
            assert np.abs(ecdf - truth).max() < 0.01

    def test_triangle_marginals(self):
        for arm in (0, 1):
            x = np.sort(self._draws("triangle", arm))
            ecdf = np.arange(1, self.M + 1) / self.M
            assert np.abs(ecdf - _tent_cdf(x, 0.5 * arm)).max() < 0.01

    def test_uniform_marginals_and_support(self):
        for arm, lo in ((0, 0.0), (1, 0.1)):
            x = self._draws("uniform", arm)
            assert x.min() >= lo and x.max() < lo + 1.0
            xs = np.sort(x)
            ecdf = np.arange(1, self.M + 1) / self.M
            assert np.abs(ecdf - (xs - lo)).max() < 0.01

    def test_bad_arm_rejected(self):
        with pytest.raises(ValueError, match="arm"):
            make_design("uniform").sample_arm(np.random.default_rng(0), 5, 2)


class TestSampling:
    def test_layout(self):
        d = make_design("gaussian")
        ds = sample_design(d, 40, seed=62)
        assert ds.n == 80 and ds.n0 == 40 and ds.n1 == 40
        np.testing.assert_array_equal(ds.labels[:40], 0)
        np.testing.assert_array_equal(ds.labels[40:], 1)
        assert ds.dims == 1

    def test_seed_determinism(self):
        d = make_design("triangle")
        a = sample_design(d, 30, seed=63)
        b = sample_design(d, 30, seed=63)
        np.testing.assert_array_equal(a.points, b.points)
        c = sample_design(d, 30, seed=64)
        assert not np.array_equal(a.points, c.points)

    def test_replicate_seed_distinct(self):
        d = make_design("uniform")
        states = {
            replicate_seed(5, d, n, r).generate_state(2).tobytes()
            for n in (50, 100)
            for r in range(3)
        }
        assert len(states) == 6

    def test_run_replicate_deterministic(self):
        d = make_design("uniform")
        a = run_replicate(d, 50, master_seed=7, r=0)
        b = run_replicate(d, 50, master_seed=7, r=0)
        assert a == b
        assert a.psi_kernel >= 0.0 and a.rounds >= 1


@pytest.fixture(scope="module")
def small():
    return run_ladder(make_design("uniform"), [50], replicates=5, master_seed=11)


class TestLadder:
    def test_row_structure(self, small):
        assert [r.method for r in small] == ["kernel", "tmle"]
        for r in small:
            assert r.design == "uniform"
            assert r.n == 50
            assert r.replicates == 5
            assert r.failures == 0
            assert 0.0 <= r.coverage_oracle <= 1.0
            assert 0.0 <= r.coverage_sample <= 1.0
            assert r.mse_times_n >= 0.0
            assert r.efficiency_bound == pytest.approx(1.44, abs=1e-9)
            assert r.master_seed == 11

    def test_mse_decomposition(self, small):
        # n * mean(err^2) equals the ddof-0 variance plus squared bias
        for r in small:
            var0 = r.var_times_n * (r.replicates - 1) / r.replicates
            assert r.mse_times_n >= var0 - 1e-9 * max(1.0, r.mse_times_n)

    def test_mean_rounds(self, small):
        kernel, tmle = small
        assert kernel.mean_rounds == 0.0
        assert tmle.mean_rounds >= 1.0

    def test_default_schedule_constants(self):
        assert DEFAULT_LADDER[0] == 50 and DEFAULT_LADDER[-1] == 12800
        assert all(b == 2 * a for a, b in zip(DEFAULT_LADDER, DEFAULT_LADDER[1:]))

    def test_bad_arguments(self):
        d = make_design("uniform")
        with pytest.raises(ValueError, match="nonempty"):
            run_ladder(d, [], replicates=5, master_seed=1)
        with pytest.raises(ValueError, match="replicates"):
            run_ladder(d, [50], replicates=1, master_seed=1)
        with pytest.raises(ValueError, match="jobs"):
            run_ladder(d, [50], replicates=5, master_seed=1, jobs=0)

    def test_csv_round_trip(self, small, tmp_path):
        path = tmp_path / "results.csv"
        write_results_csv(small, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == RESULT_COLUMNS
        assert len(rows) == 3
        for row, res in zip(rows[1:], small):
            assert row[0] == res.design and row[1] == res.method
            assert int(row[2]) == res.n and int(row[3]) == res.replicates
            assert float(row[4]) == res.coverage_oracle
            assert float(row[6]) == res.mse_times_n
            assert float(row[8]) == res.efficiency_bound

    def test_csv_byte_identical(self, small, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_results_csv(small, p1)
        write_results_csv(small, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_jobs_do_not_change_results(self, small):
        parallel = run_ladder(
            make_design("uniform"), [50], replicates=5, master_seed=11, jobs=2
        )
        assert parallel == small
