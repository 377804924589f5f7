import csv

import numpy as np
import pytest

from chcontrol.grid import Field, SpaceGrid, TimeGrid, Trajectory
from chcontrol.harness import (
    PRESETS,
    ExperimentPreset,
    HarnessError,
    _restrict,
    fit_rate,
    run_preset,
    spatial_convergence_study,
    temporal_convergence_study,
    write_convergence_csv,
    write_snapshot_csv,
    write_spacetime_csv,
    write_summary_csv,
)
from chcontrol.ocp import ProblemSpec, SweepConfig

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def cheap_spec(scheme="s1", n=17, T=0.01, nt=4):
    return ProblemSpec(
        grid=SpaceGrid.line(0.0, 1.0, n),
        time=TimeGrid(T, nt),
        eps=0.05, lam=0.1, scheme=scheme,
        y0="cos(2*pi*x)", target="cos(2*pi*x)*exp(-t)",
    )


class TestFitRate:
    def test_linear_data(self):
        xs = [1e-2, 5e-3, 2.5e-3]
        assert fit_rate(xs, xs) == pytest.approx(1.0, abs=1e-12)

    def test_quadratic_data(self):
        xs = np.array([1e-2, 5e-3, 2.5e-3])
        assert fit_rate(xs, xs ** 2) == pytest.approx(2.0, abs=1e-12)

    def test_synthetic_geometric_errors(self):
        es = [1e-2, 5e-3, 2.5e-3]
        xs = [1e-2, 5e-3, 2.5e-3]
        assert fit_rate(xs, es) == pytest.approx(1.0, abs=1e-12)

    def test_noisy_three_halves(self):
        xs = np.array([1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3])
        noise = np.array([1.01, 0.99, 1.01, 0.99, 1.01])
        es = xs ** 1.5 * noise
        # closed-form least squares on the noisy data stays near 1.5
        assert abs(fit_rate(xs, es) - 1.5) <= 0.02

    def test_degenerate_levels_rejected(self):
        with pytest.raises(HarnessError):
            fit_rate([1e-2, 1e-2], [1.0, 2.0])

    def test_nonpositive_rejected(self):
        with pytest.raises(HarnessError):
            fit_rate([1e-2, 5e-3], [0.0, 1e-3])


class TestTemporalStudy:
    def test_self_comparison_is_exact_zero(self):
        base = cheap_spec(nt=4)
        ref_dt = base.time.T / 4
        rep = temporal_convergence_study(base, [ref_dt], ref_dt)
        assert rep.levels == (ref_dt,)
        assert rep.state_errors[0] == 0.0
        assert rep.adjoint_errors[0] == 0.0
        assert np.isnan(rep.state_rate)

    def test_errors_decrease_with_dt(self):
        base = cheap_spec()
        T = base.time.T
        rep = temporal_convergence_study(base, [T / 2, T / 4, T / 8], T / 64)
        assert rep.state_errors[0] > rep.state_errors[-1]
        assert rep.adjoint_errors[0] > rep.adjoint_errors[-1]
        assert rep.levels[0] > rep.levels[-1]

    def test_non_divisible_dt_rejected(self):
        base = cheap_spec()
        with pytest.raises(HarnessError):
            temporal_convergence_study(base, [base.time.T / 3],
                                       base.time.T / 10)

    def test_dt_not_dividing_horizon_rejected(self):
        base = cheap_spec()
        with pytest.raises(HarnessError):
            temporal_convergence_study(base, [0.0034], 0.0017)


class TestSpatialStudy:
    def test_restriction_picks_coincident_nodes(self):
        fine = SpaceGrid.line(0.0, 1.0, 9)
        vals = np.arange(9.0)
        coarse = _restrict(vals, fine, 2)
        np.testing.assert_array_equal(coarse, [0, 2, 4, 6, 8])

    def test_restriction_2d(self):
        fine = SpaceGrid.rect(0.0, 1.0, 5)
        vals = np.arange(25.0)
        coarse = _restrict(vals, fine, 2)
        np.testing.assert_array_equal(coarse.reshape(3, 3),
                                      [[0, 2, 4], [10, 12, 14], [20, 22, 24]])

    def test_non_nested_rejected(self):
        base = cheap_spec()
        with pytest.raises(HarnessError):
            spatial_convergence_study(base, [12], 17)

    def test_zero_error_at_reference_level(self):
        base = cheap_spec(n=9, nt=2)
        rep = spatial_convergence_study(base, [9], 9)
        assert rep.state_errors[0] == 0.0

    def test_errors_decrease_with_h(self):
        base = cheap_spec(n=9, nt=50)
        rep = spatial_convergence_study(base, [9, 17, 33], 129)
        assert rep.state_errors[0] > rep.state_errors[-1]


class TestCsvWriters:
    def test_snapshot_schema_1d(self, tmp_path):
        g = SpaceGrid.line(0.0, 1.0, 5)
        path = tmp_path / "snap.csv"
        write_snapshot_csv(path, Field.sample(g, lambda x: x * 2))
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["x", "value"]
        assert len(rows) == 6
        assert all(len(r) == 2 for r in rows[1:])
        assert float(rows[3][1]) == pytest.approx(1.0)

    def test_snapshot_schema_2d(self, tmp_path):
        g = SpaceGrid.rect(0.0, 1.0, 4)
        path = tmp_path / "snap2.csv"
        write_snapshot_csv(path, Field.zeros(g))
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["x", "y", "value"]
        assert len(rows) == 17

    def test_spacetime_schema(self, tmp_path):
        g = SpaceGrid.line(0.0, 1.0, 4)
        tg = TimeGrid(1.0, 2)
        traj = Trajectory.zeros(g, tg)
        path = tmp_path / "xt.csv"
        write_spacetime_csv(path, traj)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["t", "x", "value"]
        assert len(rows) == 1 + 3 * 4

    def test_seventeen_significant_digits(self, tmp_path):
        g = SpaceGrid.line(0.0, 1.0, 4)
        value = 1.0 / 3.0
        path = tmp_path / "digits.csv"
        write_snapshot_csv(path, Field.full(g, value))
        text = path.read_text()
        assert "0.33333333333333331" in text

    def test_summary_roundtrip(self, tmp_path):
        path = tmp_path / "summary.csv"
        write_summary_csv(path, [("cost", 0.125), ("converged", True)])
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["key", "value"]
        assert rows[1] == ["cost", "0.125"]
        assert rows[2] == ["converged", "true"]

    def test_convergence_schema(self, tmp_path):
        from chcontrol.harness import ConvergenceReport
        rep = ConvergenceReport("time", (1e-2, 5e-3), (1e-3, 5e-4),
                                (1e-4, 5e-5), 1.0, 1.0)
        path = tmp_path / "conv.csv"
        write_convergence_csv(path, rep)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["level", "state_error", "adjoint_error"]
        assert len(rows) == 3


class TestPresetCatalog:
    def test_catalog_covers_the_figure_range(self):
        assert len(PRESETS) >= 10
        for n in range(1, 16):
            assert f"fig{n}" in PRESETS

    def test_names_unique_and_match_keys(self):
        for key, preset in PRESETS.items():
            assert key == preset.name

    def test_unknown_preset_rejected(self, tmp_path):
        with pytest.raises(HarnessError, match="unknown preset"):
            run_preset("nope", tmp_path)

    def test_run_preset_writes_expected_files(self, tmp_path, monkeypatch):
        tiny = ExperimentPreset(
            name="tiny",
            description="fast fixture",
            kind="solve",
            spec=cheap_spec(n=9, nt=2),
            expected=("target_final.csv", "state_final.csv",
                      "control_first.csv", "control_last.csv", "summary.csv",
                      "target_xt.csv", "state_xt.csv", "control_xt.csv"),
        )
        monkeypatch.setitem(PRESETS, "tiny", tiny)
        written = run_preset("tiny", tmp_path)
        names = {p.name for p in written}
        assert set(tiny.expected) == names
        for p in written:
            rows = list(csv.reader(p.open()))
            assert len(rows) >= 2
            width = len(rows[0])
            assert all(len(r) == width for r in rows)

    def test_constant_target_preset_gives_zero_cost(self, tmp_path, monkeypatch):
        flat = ExperimentPreset(
            name="flat",
            description="constant target equals the initial state",
            kind="solve",
            spec=ProblemSpec(
                # s1: the Newton initial guess already has zero residual, so
                # the constant fixed point is exact down to the last bit
                grid=SpaceGrid.line(0.0, 1.0, 9),
                time=TimeGrid(1e-3, 2),
                eps=0.05, lam=0.1, scheme="s1",
                y0="0.25", target="0.25",
            ),
        )
        monkeypatch.setitem(PRESETS, "flat", flat)
        run_preset("flat", tmp_path)
        rows = {r[0]: r[1] for r in csv.reader((tmp_path / "summary.csv").open())}
        assert float(rows["cost"]) == 0.0
        assert float(rows["control_abs_max"]) == 0.0
        assert rows["converged"] == "true"

    def test_preset_specs_are_well_formed(self):
        for preset in PRESETS.values():
            assert preset.kind in ("solve", "time_study", "space_study")
            assert preset.spec.lam > 0
            assert preset.spec.eps > 0
            if preset.kind == "time_study":
                assert preset.dts and preset.ref_dt > 0
            if preset.kind == "space_study":
                assert preset.ns and preset.ref_n > 0


class TestReferenceIndependence:
    def test_doubling_reference_barely_moves_coarse_errors(self):
        # the measured coarse-level errors must be a property of the levels,
        # not of the reference resolution
        base = ProblemSpec(
            grid=SpaceGrid.line(0.0, 1.0, 65),
            time=TimeGrid(0.1, 10),
            eps=0.05, lam=0.1, scheme="s3",
            y0="cos(2*pi*x)", target="cos(2*pi*x)*exp(-t)",
        )
        T = base.time.T
        dts = [T / 10, T / 20]
        rep_a = temporal_convergence_study(base, dts, T / 640)
        rep_b = temporal_convergence_study(base, dts, T / 1280)
        for ea, eb in zip(rep_a.state_errors, rep_b.state_errors):
            assert abs(ea - eb) < 0.1 * ea
        for ea, eb in zip(rep_a.adjoint_errors, rep_b.adjoint_errors):
            assert abs(ea - eb) < 0.1 * ea


class TestStudyCsvEndToEnd:
    def test_temporal_report_written(self, tmp_path):
        base = cheap_spec(nt=4)
        T = base.time.T
        rep = temporal_convergence_study(base, [T / 2, T / 4], T / 16)
        path = tmp_path / "conv.csv"
        write_convergence_csv(path, rep)
        rows = list(csv.reader(path.open()))
        assert len(rows) == 3
        for row in rows[1:]:
            assert all(np.isfinite(float(v)) for v in row)
