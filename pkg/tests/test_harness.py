import math
from pathlib import Path

import numpy as np
import pytest

from asqgsk.errors import ConfigError
from asqgsk.harness import cli
from asqgsk.harness.config import ExperimentConfig, build_config, load_config, parse_config_text
from asqgsk.harness.emit import COLUMNS, Row, emit, parse, render
from asqgsk.harness.experiments import (
    Point,
    all_points_invalid,
    calibrated_run,
    grid,
    point_seeds,
    run_experiment,
    upper_ci,
)
from asqgsk.harness.pipeline import MODES, assemble_keys

GOLDEN = Path(__file__).parent / "golden"
SMALL = dict(m=10, snr_db=(20.0, 25.0), target_ier=(0.01,), n_blocks=3000, n_calib_blocks=3000,
             seed=7, reproducible=True)


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.n_blocks == 200_000 and cfg.snr_db == (10, 15, 20, 25, 30)
        assert cfg.gamma is None and cfg.mode == "likelihood"

    @pytest.mark.parametrize("kw", [dict(m=3), dict(m=0), dict(snr_db=()), dict(n_blocks=0),
                                    dict(target_ier=(0.7,)), dict(mode="best"), dict(gamma=-1.0),
                                    dict(fmt="xml"), dict(quantizer="lloyd")])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw)

    def test_file_without_section(self):
        vals = parse_config_text("m = 4\nsnr = 20, 25  # dB\nier = 0.1\ngamma = tied\nreproducible = yes\n")
        assert vals == dict(m=4, snr_db=(20.0, 25.0), target_ier=(0.1,), gamma=None, reproducible=True)

    def test_file_with_section_and_flags_override(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("[run]\nm = 4\nblocks = 500\nseed = 3\n")
        cfg = build_config(load_config(p), seed=9, m=None)
        assert (cfg.m, cfg.n_blocks, cfg.seed) == (4, 500, 9)

    @pytest.mark.parametrize("text", ["colour = blue\n", "m = four\n", "[a\nm=4\n"])
    def test_bad_file(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.ini")


class TestEmit:
    rows = [Row("keyrate", 4, 20.0, 0.1, "fixed_h12", "key_rate", 0.75, 100, 0),
            Row("leakage", 4, 20.0, None, "empirical", "mi_joint", 1e-17, 5, 1)]

    def test_header_only(self):
        assert render([], "csv", reproducible=True) == ",".join(COLUMNS) + "\n"

    def test_timestamp_line(self):
        assert render([], "csv").startswith("# generated ")
        assert "generated" not in render([], "json", reproducible=True)

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_roundtrip(self, fmt):
        for repro in (True, False):
            assert parse(render(self.rows, fmt, repro), fmt) == self.rows

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_nan_roundtrip(self, fmt):
        r = Row("selection", 4, 20.0, 0.1, "invalid", "calibration_error", math.nan, 0, 0)
        back = parse(render([r], fmt, True), fmt)[0]
        assert math.isnan(back.value) and back.mode == "invalid"

    def test_write_error_names_path(self, tmp_path):
        bad = tmp_path / "missing" / "out.csv"
        with pytest.raises(OSError, match="missing"):
            emit(self.rows, "csv", bad)


class TestExperiments:
    def test_grid_and_seeds(self):
        cfg = ExperimentConfig(**SMALL)
        pts = grid(cfg)
        assert [p.index for p in pts] == [0, 1]
        a, b = point_seeds(cfg, pts[0])
        assert a.generate_state(2).tolist() != b.generate_state(2).tolist()
        assert point_seeds(cfg, pts[1])[0].generate_state(2).tolist() != a.generate_state(2).tolist()

    def test_upper_ci(self):
        assert upper_ci(0, 10_000) == pytest.approx(1 - 0.05 ** (1 / 10_000), rel=1e-9)
        assert math.isnan(upper_ci(0, 0)) and upper_ci(5, 5) == 1.0

    def test_golden_keyrate(self):
        cfg = ExperimentConfig(**SMALL)
        text = render(run_experiment("keyrate", cfg), "csv", True)
        assert text == (GOLDEN / "keyrate_m10_seed7.csv").read_text()

    def test_golden_selection(self):
        cfg = ExperimentConfig(**{**SMALL, "snr_db": (25.0,)})
        text = render(run_experiment("selection", cfg), "json", True)
        assert text == (GOLDEN / "selection_m10_seed7.json").read_text()

    def test_opportunistic_dominates(self):
        rows = run_experiment("keyrate", ExperimentConfig(**SMALL))
        rate = {(r.snr_db, r.mode): r.value for r in rows if r.metric == "key_rate"}
        for snr in SMALL["snr_db"]:
            assert rate[(snr, "opportunistic")] >= rate[(snr, "fixed_h12")]

    def test_cross_mode_accounting(self):
        cfg = ExperimentConfig(**SMALL)
        p = grid(cfg)[1]
        q, c, block, rnd, _ = calibrated_run(cfg, p)
        sizes = {}
        for mode in MODES:
            keys = assemble_keys(rnd, q, mode, c, block.sigma2, block.gamma)
            sizes[mode] = keys.bits.shape[1]
            assert keys.outcome.n_samples == 2 * cfg.n_blocks
        assert sizes["likelihood"] == sizes["strength"] >= sizes["fixed_h12"]
        assert sizes["fixed_h12"] == keys.outcome.R_h12.size

    def test_workers_do_not_change_output(self):
        cfg = ExperimentConfig(**{**SMALL, "n_blocks": 1000, "n_calib_blocks": 1000})
        one = render(run_experiment("selection", cfg), "csv", True)
        two = render(run_experiment("selection", cfg.override(workers=2)), "csv", True)
        assert one == two

    def test_calibration_failure_marks_rows(self):
        cfg = ExperimentConfig(m=4, snr_db=(20.0,), target_ier=(1e-3,), n_blocks=500,
                               n_calib_blocks=2000, quantizer="nearest")
        rows = run_experiment("reconcile", cfg)
        assert all_points_invalid(rows)
        assert rows[0].mode == "invalid" and math.isnan(rows[0].value)

    def test_reconcile_rows(self):
        cfg = ExperimentConfig(m=4, snr_db=(20.0,), target_ier=(0.1,), n_blocks=2000,
                               n_calib_blocks=2000)
        rows = {r.metric: r for r in run_experiment("reconcile", cfg)}
        L = int(rows["key_bits"].value)
        assert rows["disclosed_bits"].value == math.ceil(L / 12) * 3
        assert rows["post_mismatch"].value < rows["pre_mismatch"].value

    def test_leakage_insufficient_rows(self):
        cfg = ExperimentConfig(m=4, snr_db=(20.0,), n_blocks=100, quantizer="equiprobable")
        rows = run_experiment("leakage", cfg)
        assert any(r.mode == "insufficient" for r in rows)
        exact = {r.metric: r.value for r in rows if r.mode == "exact_uniform"}
        assert exact == {"mi_single_12": 0.0, "mi_single_13": 0.0, "mi_joint": 4.0}


class TestCli:
    base = ["--m", "4", "--snr", "20", "--ier", "0.1", "--blocks", "500", "--calib-blocks", "500",
            "--reproducible"]

    def test_success_to_stdout(self, capsys):
        code, out, _ = run_cli(["keyrate", *self.base], capsys)
        assert code == 0 and out.splitlines()[0] == ",".join(COLUMNS)

    def test_writes_file(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        code, out, _ = run_cli(["calibrate", *self.base, "--format", "json", "--out", str(path)], capsys)
        assert code == 0 and out == ""
        assert parse(path.read_text(), "json")[0].experiment == "calibrate"

    @pytest.mark.parametrize("args", [["keyrate", "--m", "3"], ["keyrate", "--snr", "abc"],
                                      ["keyrate", "--gamma", "lots"], ["frobnicate"],
                                      ["keyrate", "--ier", "0.9"], []])
    def test_config_errors(self, args, capsys):
        assert run_cli(args, capsys)[0] == 2

    def test_bad_config_file(self, tmp_path, capsys):
        p = tmp_path / "c.ini"
        p.write_text("m = 4\nwat = 1\n")
        code, _, err = run_cli(["keyrate", "--config", str(p)], capsys)
        assert code == 2 and "wat" in err

    def test_calibration_failure_exit(self, capsys):
        code, _, err = run_cli(["selection", "--m", "4", "--snr", "20", "--ier", "0.001",
                                "--blocks", "200", "--calib-blocks", "2000", "--quantizer", "nearest",
                                "--reproducible"], capsys)
        assert code == 3 and "calibration" in err

    def test_config_then_flags(self, tmp_path, capsys):
        p = tmp_path / "c.ini"
        p.write_text("m = 4\nsnr = 20\nier = 0.1\nblocks = 300\ncalib_blocks = 300\nseed = 5\n")
        code, out, _ = run_cli(["keyrate", "--config", str(p), "--seed", "6", "--reproducible"], capsys)
        rows = parse(out, "csv")
        assert code == 0 and {r.seed for r in rows} == {6} and {r.m for r in rows} == {4}

    def test_gamma_flag(self, capsys):
        _, tied, _ = run_cli(["keyrate", *self.base, "--gamma", "tied"], capsys)
        _, default, _ = run_cli(["keyrate", *self.base], capsys)
        _, fixed, _ = run_cli(["keyrate", *self.base, "--gamma", "0.5"], capsys)
        assert tied == default != fixed
