import json
import os

import numpy as np
import pytest

from rckfactor.core import BandSelection, FrequencyGrid, SweepMatrix
from rckfactor.gof import GofOutcome, KsResult
from rckfactor.kfactor import KFactorEstimate, KSeries
from rckfactor.report import (
    CaseStatistics,
    SWEEP_CSV_HEADER,
    SweepParseError,
    analyze_case,
    case_statistics,
    read_sweep_csv,
    write_gof_json,
    write_kseries_csv,
    write_report_json,
    write_sweep_csv,
)

REPORT_KEYS = ["cases", "band", "alpha", "n_samples", "definitions"]
STATS_KEYS = [
    "mean_k_db",
    "dynamic_range_db",
    "normalized_std",
    "mean_s21sq_db",
    "pass_rate_rayleigh",
    "pass_rate_rician",
    "mean_p_unstirred_db",
    "mean_p_stirred_db",
    "clamped_count",
]


def grid_of(count):
    return FrequencyGrid(24_250_000_000, 10_000_000, count)


def series_of(k_values, grid=None):
    k_values = list(k_values)
    grid = grid or grid_of(len(k_values))
    estimates = tuple(
        KFactorEstimate(
            p_unstirred=float(k),
            p_stirred=1.0,
            k_linear=float(k),
            n_samples=4,
            clamped=bool(k == 0.0),
        )
        for k in k_values
    )
    return KSeries(grid, estimates)


def sweep_of(count, n=4, seed=0, label=""):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return SweepMatrix(grid_of(count), data, case_label=label)


def gof_of(count, ray_pass=True, ric_pass=True, grid=None):
    ray = tuple(
        KsResult(d_statistic=0.01 if ray_pass else 0.9, critical_value=0.1,
                 passed=ray_pass, n=4, alpha=0.05)
        for _ in range(count)
    )
    ric = tuple(
        KsResult(d_statistic=0.01 if ric_pass else 0.9, critical_value=0.1,
                 passed=ric_pass, n=4, alpha=0.05)
        for _ in range(count)
    )
    return GofOutcome(
        grid=grid or grid_of(count),
        rayleigh=ray,
        rician=ric,
        pass_rate_rayleigh=1.0 if ray_pass else 0.0,
        pass_rate_rician=1.0 if ric_pass else 0.0,
    )


class TestCaseStatistics:
    def test_constant_series(self):
        stats = case_statistics(series_of([10.0] * 4), sweep_of(4), gof_of(4))
        assert stats.mean_k_db == pytest.approx(10.0, abs=1e-12)
        assert stats.dynamic_range_db == 0.0
        assert stats.normalized_std == 0.0
        assert stats.clamped_count == 0
        assert not stats.all_clamped

    def test_two_point_series(self):
        stats = case_statistics(series_of([1.0, 10.0]), sweep_of(2), gof_of(2))
        assert stats.dynamic_range_db == pytest.approx(10.0, abs=1e-12)
        assert stats.mean_k_db == pytest.approx(7.403626894942438, abs=1e-12)

    def test_clamped_points_excluded_from_dynamic_range(self):
        stats = case_statistics(series_of([0.0, 2.0, 8.0]), sweep_of(3), gof_of(3))
        assert stats.clamped_count == 1
        assert stats.dynamic_range_db == pytest.approx(10.0 * np.log10(4.0), abs=1e-12)

    def test_all_clamped_sentinel(self):
        stats = case_statistics(series_of([0.0, 0.0]), sweep_of(2), gof_of(2))
        assert stats.all_clamped
        assert stats.mean_k_db == -60.0
        assert stats.mean_p_unstirred_db == -60.0
        assert stats.normalized_std == 0.0

    def test_mean_s21sq(self):
        sweep = sweep_of(3, n=5, seed=9)
        stats = case_statistics(series_of([1.0, 1.0, 1.0]), sweep, gof_of(3))
        expect = 10.0 * np.log10(np.mean(np.abs(sweep.data) ** 2))
        assert stats.mean_s21sq_db == pytest.approx(expect, abs=1e-12)

    def test_grid_mismatch_rejected(self):
        with pytest.raises(ValueError, match="grid"):
            case_statistics(series_of([1.0, 2.0]), sweep_of(3), gof_of(3))

    def test_permutation_invariant_fields(self):
        rng = np.random.default_rng(61)
        values = rng.uniform(0.1, 20.0, 40)
        sweep = sweep_of(40, n=6, seed=2)
        a = case_statistics(series_of(values), sweep, gof_of(40))
        perm = rng.permutation(40)
        sweep_p = SweepMatrix(sweep.grid, sweep.data[perm])
        b = case_statistics(series_of(values[perm]), sweep_p, gof_of(40))
        assert b.mean_k_db == pytest.approx(a.mean_k_db, rel=1e-12)
        assert b.normalized_std == pytest.approx(a.normalized_std, rel=1e-12)
        assert b.dynamic_range_db == pytest.approx(a.dynamic_range_db, rel=1e-12)
        assert b.mean_s21sq_db == pytest.approx(a.mean_s21sq_db, rel=1e-12)

    def test_pass_rates_copied(self):
        stats = case_statistics(
            series_of([1.0, 2.0]), sweep_of(2), gof_of(2, ray_pass=False)
        )
        assert stats.pass_rate_rayleigh == 0.0
        assert stats.pass_rate_rician == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            CaseStatistics(
                mean_k_db=0.0,
                dynamic_range_db=-1.0,
                normalized_std=0.0,
                mean_s21sq_db=0.0,
                pass_rate_rayleigh=0.5,
                pass_rate_rician=0.5,
                mean_p_unstirred_db=0.0,
                mean_p_stirred_db=0.0,
                clamped_count=0,
            )


class TestSweepCsv:
    def test_round_trip_identity(self, tmp_path):
        sweep = sweep_of(7, n=5, seed=3)
        path = str(tmp_path / "sweep.csv")
        write_sweep_csv(sweep, path)
        assert read_sweep_csv(path) == sweep

    def test_round_trip_extreme_values(self, tmp_path):
        grid = grid_of(2)
        data = np.array(
            [
                [1e-300 + 1e300j, -0.1 + 0.3j, np.pi - 1j / 3],
                [5e-324 + 0j, 1.0 + 1.0j, -2.2250738585072014e-308 + 7j],
            ]
        )
        sweep = SweepMatrix(grid, data)
        path = str(tmp_path / "sweep.csv")
        write_sweep_csv(sweep, path)
        assert read_sweep_csv(path) == sweep

    def test_file_layout(self, tmp_path):
        sweep = sweep_of(3, n=4)
        path = str(tmp_path / "sweep.csv")
        write_sweep_csv(sweep, path)
        raw = open(path, "rb").read().decode("utf-8")
        lines = raw.split("\n")
        assert lines[0] == SWEEP_CSV_HEADER
        assert lines[-1] == ""  # trailing LF
        assert len(lines) == 1 + 3 * 4 + 1
        assert "\r" not in raw
        first = lines[1].split(",")
        assert first[0] == "24250000000" and first[1] == "0"

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("freq_hz,sample_idx,re\n100,0,1.0\n")
        with pytest.raises(SweepParseError, match="im"):
            read_sweep_csv(str(path))

    def test_ragged_rows_line_numbered(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "freq_hz,sample_idx,re,im\n"
            "100,0,1.0,0.0\n100,1,1.0,0.0\n"
            "200,0,1.0,0.0\n"
            "300,0,1.0,0.0\n300,1,1.0,0.0\n"
        )
        with pytest.raises(SweepParseError, match="line 5"):
            read_sweep_csv(str(path))

    def test_wrong_field_count_line_numbered(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("freq_hz,sample_idx,re,im\n100,0,1.0,0.0\n100,1,1.0\n")
        with pytest.raises(SweepParseError, match="line 3"):
            read_sweep_csv(str(path))

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("freq_hz,sample_idx,re,im\n100,0,inf,0.0\n100,1,1.0,0.0\n")
        with pytest.raises(SweepParseError, match="non-finite"):
            read_sweep_csv(str(path))

    def test_unsorted_frequencies_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "freq_hz,sample_idx,re,im\n"
            "200,0,1.0,0.0\n200,1,1.0,0.0\n"
            "100,0,1.0,0.0\n100,1,1.0,0.0\n"
        )
        with pytest.raises(SweepParseError, match="sorted"):
            read_sweep_csv(str(path))

    def test_sample_idx_gap_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("freq_hz,sample_idx,re,im\n100,0,1.0,0.0\n100,2,1.0,0.0\n")
        with pytest.raises(SweepParseError, match="contiguous"):
            read_sweep_csv(str(path))

    def test_non_uniform_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        rows = []
        for f in (100, 200, 450):
            rows += [f"{f},0,1.0,0.0", f"{f},1,0.5,0.0"]
        path.write_text("freq_hz,sample_idx,re,im\n" + "\n".join(rows) + "\n")
        with pytest.raises(SweepParseError, match="uniform"):
            read_sweep_csv(str(path))

    def test_single_frequency_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("freq_hz,sample_idx,re,im\n100,0,1.0,0.0\n100,1,1.0,0.0\n")
        with pytest.raises(SweepParseError, match="single-frequency"):
            read_sweep_csv(str(path))

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("")
        with pytest.raises(SweepParseError, match="header"):
            read_sweep_csv(str(path))

    def test_case_label_applied(self, tmp_path):
        sweep = sweep_of(3, n=4)
        path = str(tmp_path / "sweep.csv")
        write_sweep_csv(sweep, path)
        assert read_sweep_csv(path, case_label="foo").case_label == "foo"


class TestKseriesCsv:
    def test_layout_and_floor(self, tmp_path):
        series = series_of([2.0, 0.0, 8.0])
        path = str(tmp_path / "k.csv")
        write_kseries_csv([(0, series), (100_000_000, series)], path)
        lines = open(path).read().splitlines()
        assert lines[0] == "freq_hz,k_linear,k_db,p_unstirred,p_stirred,clamped,window_hz"
        assert len(lines) == 1 + 2 * 3
        clamped_row = lines[2].split(",")
        assert clamped_row[1] == "0.0"
        assert clamped_row[2] == "-60.0"
        assert clamped_row[5] == "true"
        assert clamped_row[6] == "0"
        assert lines[4].split(",")[6] == "100000000"


class TestReportJson:
    def _write(self, tmp_path, reports):
        path = str(tmp_path / "report.json")
        write_report_json(reports, BandSelection(24_250_000_000, 29_500_000_000), 0.05, 4, path)
        return path

    def test_empty_cases(self, tmp_path):
        path = self._write(tmp_path, [])
        payload = json.loads(open(path).read())
        assert list(payload.keys()) == REPORT_KEYS
        assert payload["cases"] == []
        assert payload["band"] == {"lo_hz": 24_250_000_000, "hi_hz": 29_500_000_000}
        assert payload["definitions"] == {"normalized_std": "std_linear/mean_linear"}

    def test_one_case_two_windows(self, tmp_path):
        sweep = sweep_of(12, n=64, seed=4, label="demo")
        rep = analyze_case(sweep, 0.05, [0, 100_000_000])
        path = self._write(tmp_path, [rep])
        payload = json.loads(open(path).read())
        case = payload["cases"][0]
        assert case["label"] == "demo"
        assert list(case["stats"].keys()) == STATS_KEYS
        assert len(case["series"]) == 2
        for entry in case["series"]:
            assert len(entry["freq_hz"]) == 12
            assert len(entry["k_db"]) == 12
        assert case["series"][0]["window_hz"] == 0
        assert case["series"][1]["window_hz"] == 100_000_000

    def test_regeneration_byte_identical(self, tmp_path):
        sweep = sweep_of(10, n=32, seed=6, label="x")
        rep = analyze_case(sweep, 0.05, [0])
        a = str(tmp_path / "a.json")
        b = str(tmp_path / "b.json")
        write_report_json([rep], BandSelection(1, 2), 0.05, 32, a)
        write_report_json([rep], BandSelection(1, 2), 0.05, 32, b)
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_gof_json(self, tmp_path):
        path = str(tmp_path / "gof.json")
        write_gof_json(gof_of(3), BandSelection(1, 2), path)
        payload = json.loads(open(path).read())
        assert payload["pass_rate_rayleigh"] == 1.0
        assert len(payload["frequencies"]) == 3
        assert payload["frequencies"][0]["rayleigh"]["pass"] is True


class TestAnalyzeCase:
    def test_report_structure(self):
        sweep = sweep_of(8, n=128, seed=10, label="case1")
        rep = analyze_case(sweep, 0.05, [0, 100_000_000, 200_000_000])
        assert rep.label == "case1"
        assert [w for w, _ in rep.series] == [0, 100_000_000, 200_000_000]
        for _, series in rep.series:
            assert series.grid == sweep.grid
        assert 0.0 <= rep.stats.pass_rate_rician <= 1.0
