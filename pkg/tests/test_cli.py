import json
import os

import numpy as np
import pytest

from specrf import cli, dataio


def run(command, tmp_path, config=None, seed=3, extra_args=()):
    out = tmp_path / command.replace("-", "_")
    args = [command, "--out", str(out), "--seed", str(seed), "--jobs", "1"]
    if config is not None:
        cfg_path = tmp_path / f"{command}.json"
        cfg_path.write_text(json.dumps(config))
        args += ["--config", str(cfg_path)]
    args += list(extra_args)
    code = cli.main(args)
    return code, out


TINY_PROBLEM = {"r": 0.5, "b": 1.0, "d_max": 32, "R": 1.0, "noise_half_width": 0.3}


class TestGen:
    def test_synthetic_dataset(self, tmp_path):
        code, out = run("gen", tmp_path, {"n": 40, "d_max": 16})
        assert code == 0
        header, body = dataio.load_results(out / "dataset.csv")
        assert header == ["u", "v"] and body.shape == (40, 2)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 3
        assert "dataset.csv" in manifest["outputs"]

    def test_susy_fixture(self, tmp_path):
        code, out = run("gen", tmp_path, {"kind": "susy-fixture", "n": 30})
        assert code == 0
        ds = dataio.load_csv(out / "dataset.csv", skip_header=True)
        assert ds.n == 30


class TestFit:
    def test_synthetic_fit(self, tmp_path):
        cfg = {"problem": TINY_PROBLEM, "n_train": 60, "n_test": 60,
               "M": 24, "T": 20}
        code, out = run("fit", tmp_path, cfg)
        assert code == 0
        header, body = dataio.load_results(out / "fit.csv")
        row = dict(zip(header, body[0]))
        assert row["test_risk"] > 0.0
        assert np.isfinite(row["excess_l2"])

    def test_csv_fit(self, tmp_path):
        fixture = tmp_path / "data.csv"
        dataio.make_susy_fixture(fixture, n=120, seed=0)
        cfg = {"csv": str(fixture), "n_train": 60, "n_test": 40, "M": 30,
               "filter": "tikhonov", "lambda": 0.3}
        # header row is not numeric: drop it first
        lines = fixture.read_text().splitlines()
        fixture.write_text("\n".join(lines[1:]) + "\n")
        code, out = run("fit", tmp_path, cfg)
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert "inputs_sha256" in manifest


class TestSweepHeatmap:
    CFG = {"problem": TINY_PROBLEM, "n_train": 80, "n_test": 80,
           "M_grid": [8, 16], "T_grid": [1, 4], "repetitions": 2}

    def test_grid_rows(self, tmp_path):
        code, out = run("sweep-heatmap", tmp_path, self.CFG)
        assert code == 0
        header, body = dataio.load_results(out / "heatmap.csv")
        assert body.shape[0] == 4  # |M_grid| x |T_grid|
        assert header[:2] == ["M", "T"]

    def test_singleton_grids_one_row(self, tmp_path):
        cfg = dict(self.CFG, M_grid=[8], T_grid=[4], repetitions=1)
        code, out = run("sweep-heatmap", tmp_path, cfg)
        assert code == 0
        _, body = dataio.load_results(out / "heatmap.csv")
        assert body.shape[0] == 1

    def test_svg_emitted(self, tmp_path):
        cfg = dict(self.CFG, svg=True)
        code, out = run("sweep-heatmap", tmp_path, cfg)
        assert code == 0
        svg = (out / "heatmap.svg").read_text()
        assert svg.startswith("<svg") and "rect" in svg


class TestRates:
    def test_small_run_emits_slope(self, tmp_path):
        cfg = {"n_grid": [100, 200, 400], "repetitions": 2, "d_max": 32,
               "C_multiplier": 0.037, "M_multiplier": 1.0, "n_test": 200}
        code, out = run("rates", tmp_path, cfg)
        assert code == 0
        header, body = dataio.load_results(out / "rates.csv")
        assert body.shape[0] == 3
        s_header, s_body = dataio.load_results(out / "summary.csv")
        slope = dict(zip(s_header, s_body[0]))["slope"]
        assert -1.5 < slope < 0.5

    def test_small_n_flagged_not_dropped(self, tmp_path):
        cfg = {"n_grid": [3, 100, 200], "repetitions": 1, "d_max": 16,
               "n_test": 50}
        code, out = run("rates", tmp_path, cfg)
        assert code == 0
        header, body = dataio.load_results(out / "rates.csv")
        flags = body[:, header.index("meets_n0")]
        assert flags[0] == 0.0 and flags[1] == 1.0


class TestVerify:
    CFG = {"problem": TINY_PROBLEM, "trials": 50, "event_n": 50, "event_M": 50,
           "events": ["E6", "E7"], "grid_points": 25,
           "max_landweber_steps": 25}

    def test_default_passes(self, tmp_path):
        code, out = run("verify", tmp_path, self.CFG)
        assert code == 0
        header, body = dataio.load_results(out / "verify_events.csv")
        rates = body[:, header.index("violation_rate")]
        assert np.all(rates <= 0.1)

    def test_broken_filter_exits_2(self, tmp_path):
        cfg = dict(self.CFG, broken_filter=True)
        code, out = run("verify", tmp_path, cfg)
        assert code == 2
        header, body = dataio.load_results(out / "verify_filters.csv")
        eflags = body[:, header.index("e_flag")]
        assert eflags.any()


class TestNTKCompare:
    CFG = {"grid_size": 6, "n_train": 10, "n_test": 12, "M_grid": [8, 16],
           "T": 4, "repetitions": 2}

    def test_medians_emitted(self, tmp_path):
        code, out = run("ntk-compare", tmp_path, self.CFG)
        assert code == 0
        header, body = dataio.load_results(out / "ntk_compare.csv")
        assert body.shape[0] == 2

    def test_identity_single_step_tiny(self, tmp_path):
        cfg = dict(self.CFG, activation="identity", T=1, alpha=0.05)
        code, out = run("ntk-compare", tmp_path, cfg)
        assert code == 0
        header, body = dataio.load_results(out / "ntk_compare.csv")
        assert np.all(body[:, header.index("median_discrepancy")] <= 1e-10)


class TestCLIContract:
    def test_unknown_config_key_exits_3(self, tmp_path):
        code, _ = run("rates", tmp_path, {"not_a_key": 1})
        assert code == 3

    def test_invalid_grid_exits_3(self, tmp_path):
        code, _ = run("rates", tmp_path, {"n_grid": []})
        assert code == 3

    def test_unreadable_config_exits_4(self, tmp_path):
        code = cli.main(["rates", "--config", str(tmp_path / "absent.json"),
                         "--out", str(tmp_path)])
        assert code == 4

    def test_env_seed_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPECRF_SEED", "777")
        code, out = run("gen", tmp_path, {"n": 10, "d_max": 16}, seed=1)
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 777

    @pytest.mark.parametrize("command,config", [
        ("gen", {"n": 25, "d_max": 16}),
        ("verify", dict(TestVerify.CFG)),
        ("ntk-compare", dict(TestNTKCompare.CFG)),
        ("sweep-heatmap", dict(TestSweepHeatmap.CFG)),
        ("rates", {"n_grid": [100, 200, 400], "repetitions": 1, "d_max": 16,
                   "n_test": 50}),
    ])
    def test_byte_identical_reruns(self, command, config, tmp_path):
        code1, out1 = run(command, tmp_path, config)
        out2_dir = tmp_path / "second"
        out2_dir.mkdir()
        cfg_path = tmp_path / f"{command}.json"
        code2 = cli.main([command, "--out", str(out2_dir), "--seed", "3",
                          "--jobs", "1", "--config", str(cfg_path)])
        assert code1 == code2 == 0 or command == "verify" and code1 == code2
        for name in sorted(os.listdir(out1)):
            if name.endswith(".csv"):
                assert (out1 / name).read_bytes() == (out2_dir / name).read_bytes(), name
