import json
import math

import numpy as np
import pytest

from conjdeco import cli
from conjdeco.errors import ConfigurationError

GOOD = """
model.sigma = 1.0
model.eta1 = 1.0
model.eta2 = 1.0
grid.position.n = 128
grid.position.half_width = 24
grid.momentum.n = 128
grid.momentum.half_width = 12
times = 0, 1, 2
outputs = matrices, diagonals, metrics, heatmaps
heatmap.n = 41
heatmap.half_width = 6
output_dir = out
"""


class TestValidate:
    def test_good_config(self):
        cfg = cli.validate(GOOD)
        assert cfg.sigma == 1.0
        assert cfg.times == (0.0, 1.0, 2.0)
        assert math.isinf(cfg.mass)
        assert cfg.outputs == {"matrices", "diagonals", "metrics", "heatmaps"}

    def test_all_errors_reported_at_once(self):
        bad = "model.sigma = -1\ntimes = 2, 1\nbogus = 3\n"
        with pytest.raises(ConfigurationError) as exc:
            cli.validate(bad)
        msg = str(exc.value)
        assert "unknown key 'bogus'" in msg
        assert "model.sigma" in msg
        assert "strictly increasing" in msg
        assert "grid.position.n" in msg

    def test_sizing_rule_checked_at_latest_time(self):
        bad = GOOD.replace("times = 0, 1, 2", "times = 0, 1, 2, 10")
        with pytest.raises(ConfigurationError) as exc:
            cli.validate(bad)
        assert "sizing rule" in str(exc.value)

    def test_duplicate_and_malformed_lines(self):
        with pytest.raises(ConfigurationError) as exc:
            cli.validate(GOOD + "model.sigma = 2\nnot a pair\n")
        assert "duplicate key" in str(exc.value)
        assert "expected 'key = value'" in str(exc.value)

    def test_oracle_times_subset(self):
        with pytest.raises(ConfigurationError) as exc:
            cli.validate(GOOD + "oracle.times = 7\n")
        assert "subset" in str(exc.value)

    def test_finite_mass(self):
        cfg = cli.validate(GOOD + "model.mass = 2.5\n")
        assert cfg.mass == 2.5

    def test_comments_ignored(self):
        cfg = cli.validate(GOOD + "# a comment\n")
        assert cfg.times == (0.0, 1.0, 2.0)


@pytest.fixture(scope="module")
def run_result(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("run")
    cfg = cli.validate(GOOD)
    report = cli.run(cfg, output_dir=str(outdir))
    return cfg, outdir, report


class TestRun:
    def test_expected_files_exist(self, run_result):
        _, outdir, report = run_result
        names = {p.name for p in outdir.iterdir()}
        assert "report.json" in names
        assert "metrics.csv" in names
        assert "rho_position_t0.csv" in names
        assert "rho_momentum_t2.csv" in names
        assert "diagonal_position_t1.csv" in names
        assert "heatmap_momentum_t2.csv" in names
        assert set(report["files"]) <= names

    def test_matrix_roundtrip(self, run_result):
        _, outdir, _ = run_result
        meta = json.loads((outdir / "rho_position_t1.meta.json").read_text())
        data = np.loadtxt(outdir / "rho_position_t1.csv",
                          delimiter=",", skiprows=1)
        n = meta["n"]
        elems = (data[:, 2] + 1j * data[:, 3]).reshape(n, n)
        assert abs(np.trace(elems).real - 1.0) <= 1e-9
        assert np.abs(elems - elems.conj().T).max() <= 1e-12

    def test_diagonal_sums_to_one(self, run_result):
        _, outdir, _ = run_result
        data = np.loadtxt(outdir / "diagonal_position_t2.csv",
                          delimiter=",", skiprows=1)
        assert data[:, 2].sum() == pytest.approx(1.0, abs=1e-9)

    def test_heatmap_normalized(self, run_result):
        _, outdir, _ = run_result
        mags = np.loadtxt(outdir / "heatmap_position_t1.csv", delimiter=",")
        assert mags.shape == (41, 41)
        assert mags.max() == pytest.approx(1.0)

    def test_report_contents(self, run_result):
        _, _, report = run_result
        assert report["metric_rows"]
        ts = {row["t"] for row in report["metric_rows"]}
        assert ts == {0.0, 1.0, 2.0}
        for v in report["pre_normalization_traces"].values():
            assert v == pytest.approx(1.0, abs=1e-8)

    def test_reruns_are_byte_identical(self, run_result, tmp_path):
        cfg, _, report = run_result
        second = cli.run(cfg, output_dir=str(tmp_path))
        assert second["files"] == report["files"]

    def test_workers_do_not_change_output(self, run_result, tmp_path):
        cfg, _, report = run_result
        second = cli.run(cfg, workers=3, output_dir=str(tmp_path))
        assert second["files"] == report["files"]


class TestOracleMode:
    def test_residual_rows(self, tmp_path):
        cfg = cli.validate(GOOD + "oracle.times = 1\noracle.grid_n = 32\n")
        report = cli.oracle_only(cfg, output_dir=str(tmp_path))
        rows = report["oracle_residuals"]
        assert {r["basis"] for r in rows} == {"position", "momentum"}
        assert all(r["max_abs_residual"] <= 1e-3 for r in rows)
        assert (tmp_path / "oracle_report.json").exists()

    def test_requires_oracle_times(self, tmp_path):
        cfg = cli.validate(GOOD)
        with pytest.raises(ConfigurationError):
            cli.oracle_only(cfg, output_dir=str(tmp_path))


class TestMainExitCodes:
    def test_validate_ok(self, tmp_path, capsys):
        cfgfile = tmp_path / "a.cfg"
        cfgfile.write_text(GOOD)
        assert cli.main(["validate", str(cfgfile)]) == 0
        assert "sigma" in capsys.readouterr().out

    def test_invalid_config_is_1(self, tmp_path, capsys):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("model.sigma = -1\n")
        assert cli.main(["run", str(cfgfile)]) == 1

    def test_missing_file_is_3(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 3

    def test_run_ok(self, tmp_path, capsys):
        cfgfile = tmp_path / "a.cfg"
        small = GOOD.replace("times = 0, 1, 2", "times = 0, 1").replace(
            "outputs = matrices, diagonals, metrics, heatmaps",
            "outputs = metrics")
        cfgfile.write_text(small)
        code = cli.main(["run", str(cfgfile),
                         "--output-dir", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "out" / "metrics.csv").exists()
