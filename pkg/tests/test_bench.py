"""Experiment drivers: configs, scenario mechanics, reproducibility."""

import csv
import json
import math

import numpy as np
import pytest

from mlbn.bench import (
    ExperimentConfig,
    centered_qp_estimate,
    competitor_weight_for_occupancy,
    expected_max_std_normal,
    gmm_stability_probe,
    run_exact_recovery,
    run_inactivation_sweep,
    run_instability_trace,
    run_scenario,
    smoothed_means,
)
from mlbn.presets import competing_parents
from mlbn.simulate import InnovationSpec, NoiseSpec, differences, simulate


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(scenario="recovery", N=0)
        with pytest.raises(ValueError):
            ExperimentConfig(scenario="recovery", sigma=-0.1)

    def test_large_sigma_warns(self):
        with pytest.warns(UserWarning, match="0.25"):
            ExperimentConfig(scenario="recovery", sigma=0.3)

    def test_unknown_scenario(self):
        with pytest.raises(ValueError, match="unknown scenario"):
            run_scenario(ExperimentConfig(scenario="nope"))


class TestOccupancyControl:
    def test_weight_formula_range(self):
        with pytest.raises(ValueError):
            competitor_weight_for_occupancy(0.0)
        with pytest.raises(ValueError):
            competitor_weight_for_occupancy(0.6)

    def test_calibration_matches_simulation(self):
        # log-Frechet(0,1,1) innovations are Gumbel, so occupancies follow a
        # softmax over term locations; verify the inversion empirically
        for p in (0.02, 0.1, 0.3):
            dag = competing_parents(competitor_weight_for_occupancy(p))
            s = simulate(
                dag, InnovationSpec(), NoiseSpec.constant(0.0, 3), 20000, seed=0
            )
            hit = float(np.mean(s.provenance[:, 2] == 2))
            assert hit == pytest.approx(p, rel=0.2, abs=0.005)

    def test_expected_max_increases(self):
        vals = [expected_max_std_normal(k) for k in (5, 20, 100, 1000)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestExactRecovery:
    def test_star_graph_all_exact(self):
        cfg = ExperimentConfig(scenario="recovery", graph="star4", N=500, seeds=(0, 1))
        result = run_exact_recovery(cfg)
        assert result.notes["exact_match_fraction"] == 1.0

    def test_single_sample_upper_bounds(self):
        cfg = ExperimentConfig(scenario="recovery", graph="star4", N=1, seeds=(0,))
        result = run_exact_recovery(cfg)
        col = result.columns.index("estimate")
        truth = result.columns.index("omega_true")
        assert all(row[col] >= row[truth] for row in result.rows)

    def test_masked_edge_reports_path_weight(self, tmp_path):
        from mlbn.network import save_dag
        from mlbn.presets import triangle
        from mlbn.tropical import MASKED

        path = tmp_path / "tri.json"
        save_dag(triangle(w12=1.0, w23=1.0, w13=0.2), path)
        cfg = ExperimentConfig(
            scenario="recovery", graph=str(path), N=3000, seeds=(0,)
        )
        result = run_exact_recovery(cfg)
        row = next(r for r in result.rows if (r[1], r[2]) == (1, 3))
        cols = result.columns
        assert row[cols.index("edge_class")] == MASKED
        assert row[cols.index("estimate")] == pytest.approx(2.0, abs=1e-12)
        assert row[cols.index("closure_weight")] == pytest.approx(2.0)


class TestInactivationSweep:
    @pytest.fixture(scope="class")
    def sweep(self):
        cfg = ExperimentConfig(
            scenario="inactivation",
            N=1000,
            sigma=0.1,
            seeds=tuple(range(5)),
            grid=(0.011, 0.046, 0.2),
        )
        return cfg, run_inactivation_sweep(cfg)

    def test_gmm_error_shrinks_with_occupancy(self, sweep):
        _, result = sweep
        cols = result.columns
        by_point = {}
        for row in result.rows:
            if row[cols.index("gmm_abs_error")] is not None:
                by_point.setdefault(row[0], []).append(row[cols.index("gmm_abs_error")])
        means = [float(np.mean(v)) for _, v in sorted(by_point.items())]
        smoothed = smoothed_means(means)
        assert all(a >= b - 1e-12 for a, b in zip(smoothed, smoothed[1:]))

    def test_qp_error_band(self, sweep):
        _, result = sweep
        cols = result.columns
        by_point = {}
        for row in result.rows:
            by_point.setdefault(row[0], []).append(row[cols.index("qp_abs_error")])
        for _, errs in by_point.items():
            assert float(np.median(errs)) <= 0.15

    def test_noise_free_grid_point_refused(self):
        cfg = ExperimentConfig(
            scenario="inactivation", N=500, sigma=0.0, seeds=(0,), grid=(0.1,)
        )
        result = run_inactivation_sweep(cfg)
        note = result.rows[0][result.columns.index("note")]
        assert "refused" in note
        assert result.rows[0][result.columns.index("gmm_estimate")] is None

    def test_csv_reproducible(self, sweep, tmp_path):
        cfg, result = sweep
        p1 = result.write(tmp_path / "a", "sweep")
        p2 = run_inactivation_sweep(cfg).write(tmp_path / "b", "sweep")
        assert p1.read_bytes() == p2.read_bytes()

    def test_manifest_written(self, sweep, tmp_path):
        _, result = sweep
        result.write(tmp_path, "sweep")
        manifest = json.loads((tmp_path / "sweep.manifest.json").read_text())
        assert manifest["scenario"] == "inactivation"
        assert manifest["outputs"] == ["sweep.csv"]
        with open(tmp_path / "sweep.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(result.columns)
        assert len(rows) == len(result.rows) + 1


class TestStabilityProbe:
    def test_stable_at_high_count(self):
        med, iqr, _ = gmm_stability_probe(
            1000, 120, 0.1, seeds=range(8), restarts=2
        )
        assert med <= 0.1 and iqr <= 0.1

    def test_unstable_at_low_count(self):
        med, _, _ = gmm_stability_probe(1000, 8, 0.1, seeds=range(8), restarts=2)
        assert med >= 0.5


class TestInstabilityTrace:
    def test_spread_shrinks_with_count(self):
        cfg = ExperimentConfig(
            scenario="instability", N=4000, seeds=tuple(range(4)), grid=(30, 400)
        )
        result = run_instability_trace(cfg)
        cols = result.columns
        spread = {}
        for row in result.rows:
            if row[cols.index("estimate")] is not None:
                spread.setdefault(row[0], []).append(row[cols.index("estimate")])
        low = np.ptp(spread[30])
        high = np.ptp(spread[400])
        assert high < low

    def test_low_count_positive_bias(self):
        cfg = ExperimentConfig(
            scenario="instability", N=4000, seeds=tuple(range(4)), grid=(30,)
        )
        result = run_instability_trace(cfg)
        ests = [r[-1] for r in result.rows if r[-1] is not None]
        assert np.median(ests) > 0.2


class TestCenteredQp:
    def test_error_within_band(self):
        dag = competing_parents(competitor_weight_for_occupancy(0.05))
        errs = []
        for seed in range(5):
            s = simulate(dag, InnovationSpec(), NoiseSpec.constant(0.1, 3), 1000, seed=seed)
            k = int((s.provenance[:, 2] == 2).sum())
            est = centered_qp_estimate(differences(s, 2, 3), 0.1, k)
            errs.append(abs(est))
        assert float(np.median(errs)) <= 0.15
