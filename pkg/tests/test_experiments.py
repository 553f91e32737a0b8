import math

import pytest

import chasescape as cs
from chasescape.errors import ParameterError
from chasescape.experiments import CSV_HEADER


def small_spec(**overrides):
    base = dict(dim=2, radius=1.0, mu_s=1.5, box_side=10.0,
                lambda_grid=(0.5, 2.0), mu_w_grid=(0.2, 0.8),
                replications=30, master_seed=91)
    base.update(overrides)
    return cs.SweepSpec(**base)


class TestRunSweep:
    def test_deterministic_and_partitioned(self):
        spec = small_spec()
        t1 = cs.run_sweep(spec)
        t2 = cs.run_sweep(spec)
        assert t1.rows == t2.rows
        assert t1.to_csv() == t2.to_csv()
        for row in t1.rows:
            assert row.n_extinct + row.n_local + row.n_global_proxy == row.reps

    def test_single_cell_single_rep(self):
        spec = small_spec(lambda_grid=(1.0,), mu_w_grid=(0.5,), replications=1)
        t1 = cs.run_sweep(spec)
        t2 = cs.run_sweep(spec)
        assert t1.rows == t2.rows
        assert len(t1.rows) == 1

    def test_half_grids_reproduce_full_rows(self):
        # value-keyed cell streams: splitting the grid changes nothing
        full = cs.run_sweep(small_spec(lambda_grid=(0.5, 1.0, 2.0, 4.0)))
        left = cs.run_sweep(small_spec(lambda_grid=(0.5, 1.0)))
        right = cs.run_sweep(small_spec(lambda_grid=(2.0, 4.0)))
        merged = {(r.lambda_i, r.mu_w): r for r in left.rows + right.rows}
        for row in full.rows:
            assert merged[(row.lambda_i, row.mu_w)] == row

    def test_thread_count_does_not_change_rows(self):
        spec = small_spec(replications=16)
        serial = cs.run_sweep(spec, threads=1)
        parallel = cs.run_sweep(spec, threads=2)
        assert serial.rows == parallel.rows

    def test_csv_header_exact(self):
        table = cs.run_sweep(small_spec(replications=2))
        lines = table.to_csv().splitlines()
        assert lines[0] == CSV_HEADER
        assert lines[0] == ("lambda_i,mu_w,reps,n_extinct,n_local,n_global_proxy,"
                            "frac_global,stderr_global,mean_total_infected,"
                            "mean_extinction_time")
        assert len(lines) == 1 + 2 * 2

    def test_manifest_contents(self):
        table = cs.run_sweep(small_spec(replications=2))
        m = table.manifest
        assert m["master_seed"] == 91
        assert m["tool_version"] == cs.__version__
        assert "wall_time_s" in m
        assert m["sweep"]["lambda_grid"] == [0.5, 2.0]

    def test_validation(self):
        with pytest.raises(ParameterError):
            small_spec(lambda_grid=())
        with pytest.raises(ParameterError):
            small_spec(replications=0)

    def test_matrix_orientation(self):
        table = cs.run_sweep(small_spec(replications=5))
        mat = table.frac_global_matrix()
        assert mat.shape == (2, 2)  # (mu_w, lambda)
        by_key = {(r.lambda_i, r.mu_w): r.frac_global for r in table.rows}
        assert mat[0, 1] == by_key[(2.0, 0.2)]


class TestConnectiveConstant:
    def test_length_zero_is_identically_one(self):
        rows = cs.connective_constant_experiment(1.0, 1.0, 2, n_max=1,
                                                 samples=50, master_seed=3)
        assert rows[0].mean == 1.0 and rows[0].stderr == 0.0
        assert rows[0].analytic == 1.0

    def test_small_run_matches_analytic(self):
        # reduced-size version of the Slivnyak-Mecke check (n = 2)
        rows = cs.connective_constant_experiment(1.0, 1.0, 2, n_max=2,
                                                 samples=3000, master_seed=4)
        row = rows[2]
        assert row.analytic == pytest.approx(math.pi**2, rel=1e-12)
        assert abs(row.mean - row.analytic) <= 3 * row.stderr

    def test_growth_rate_bounded(self):
        rows = cs.connective_constant_experiment(1.0, 1.0, 2, n_max=5,
                                                 samples=800, master_seed=5)
        rate = rows[5].growth_rate
        assert rate <= math.log(math.pi) + 0.1

    def test_capped_samples_are_excluded(self):
        rows = cs.connective_constant_experiment(2.0, 1.0, 2, n_max=3,
                                                 samples=40, master_seed=6,
                                                 max_paths=5)
        row = rows[3]
        assert row.capped_excluded > 0
        assert row.samples + row.capped_excluded == 40


class TestLocalSurvival:
    def test_empty_system_is_certain_local_survival(self):
        res = cs.local_survival_experiment(0.0, 0.0, 1.0, 2, 20.0,
                                           replications=20, master_seed=7)
        assert res.dynamic_estimate == 1.0
        assert res.void_estimate == 1.0
        assert res.lower_bound == 1.0

    def test_dual_estimators_agree_across_parameter_sets(self):
        for mu_s, mu_w, seed in ((0.3, 0.8, 8), (0.7, 0.3, 9), (0.5, 0.5, 10)):
            res = cs.local_survival_experiment(mu_s, mu_w, 1.0, 2, 16.0,
                                               replications=1200, master_seed=seed,
                                               volume_samples=20_000)
            diff = abs(res.dynamic_estimate - res.void_estimate)
            combined = math.hypot(res.dynamic_stderr, res.void_stderr)
            assert diff <= 3 * combined
            assert res.lower_bound - 3 * res.dynamic_stderr <= res.dynamic_estimate

    def test_bounds_come_from_analytics(self):
        res = cs.local_survival_experiment(0.5, 0.5, 1.0, 2, 12.0,
                                           replications=10, master_seed=11)
        lower, upper = cs.local_survival_bounds(0.5, 0.5, 1.0, 2, 0.0)
        assert res.lower_bound == lower and res.upper_bound == upper


class TestPercolationConsistency:
    def test_monotone_curve_and_crossing(self):
        res = cs.percolation_consistency(1.0, 2, 20.0,
                                         mu_grid=[0.5, 1.0, 1.5, 2.0, 2.5],
                                         replications=60, master_seed=12)
        thetas = [t for _, t, _ in res.rows]
        assert all(a <= b for a, b in zip(thetas, thetas[1:]))
        assert res.mu_c_hat is not None
        assert res.mu_c_hat * cs.ball_volume(2, 1.0) >= 1.0

    def test_zero_intensity_theta_zero(self):
        res = cs.percolation_consistency(1.0, 2, 10.0, mu_grid=[0.0, 2.5],
                                         replications=30, master_seed=13)
        assert res.rows[0][1] == 0.0

    def test_grid_must_increase(self):
        with pytest.raises(ParameterError):
            cs.percolation_consistency(1.0, 2, 10.0, mu_grid=[1.0, 0.5],
                                       replications=5, master_seed=14)
