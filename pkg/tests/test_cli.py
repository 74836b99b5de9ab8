import json

import numpy as np
import pytest
from click.testing import CliRunner

from mpc3.cli import main


@pytest.fixture
def runner():
    return CliRunner()


class TestSimulate:
    def test_dealer_mode(self, runner, toy_csv, tmp_path):
        model = tmp_path / "model.json"
        stats = tmp_path / "stats.json"
        result = runner.invoke(main, [
            "simulate", "--data", str(toy_csv), "--iterations", "15",
            "--batch-size", "16", "--model-out", str(model),
            "--stats-out", str(stats),
        ])
        assert result.exit_code == 0, result.output
        assert "balanced accuracy" in result.output
        assert "modeled WAN" in result.output
        m = json.loads(model.read_text())
        assert len(m["weights"]) == 5
        s = json.loads(stats.read_text())
        assert s["rounds"] > 0 and s["total_bytes"] > 0
        assert "modeled_wan_seconds" in s

    def test_horizontal_mode_same_weights(self, runner, toy_csv, tmp_path):
        outs = []
        for mode in ("dealer", "horizontal"):
            model = tmp_path / f"{mode}.json"
            result = runner.invoke(main, [
                "simulate", "--data", str(toy_csv), "--iterations", "5",
                "--batch-size", "8", "--partition", mode,
                "--model-out", str(model),
            ])
            assert result.exit_code == 0, result.output
            outs.append(json.loads(model.read_text())["weights"])
        # Same plaintext rows, same schedule: both partitions learn the
        # same model up to fixed-point noise.
        np.testing.assert_allclose(outs[0], outs[1], atol=1e-3)

    def test_deterministic(self, runner, toy_csv):
        args = ["simulate", "--data", str(toy_csv), "--iterations", "5",
                "--batch-size", "8", "--seed", "3"]
        out1 = runner.invoke(main, args)
        out2 = runner.invoke(main, args)

        def stable(res):  # drop the wall-time line, which varies run to run
            return [l for l in res.output.splitlines() if not l.startswith("wall time")]

        assert stable(out1) == stable(out2)

    def test_train_config_file(self, runner, toy_csv, tmp_path):
        cfg = tmp_path / "train.json"
        cfg.write_text(json.dumps({"iterations": 4, "batch_size": 8, "sigmoid_kind": "3"}))
        result = runner.invoke(main, ["simulate", "--data", str(toy_csv),
                                      "--train-config", str(cfg)])
        assert result.exit_code == 0, result.output
        assert "iterations: 4" in result.output


class TestBench:
    def test_small_grid(self, runner, tmp_path):
        out = tmp_path / "bench.csv"
        result = runner.invoke(main, [
            "bench", "--features", "8", "--features", "16",
            "--batch", "8", "--iters", "2", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("features,batch")
        assert len(lines) == 3
        r8 = lines[1].split(",")
        r16 = lines[2].split(",")
        assert float(r8[5]) == float(r16[5])  # rounds/iter constant in features


class TestSigmoidTable:
    def test_csv_columns(self, runner, tmp_path):
        out = tmp_path / "table.csv"
        result = runner.invoke(main, [
            "sigmoid-table", "--kind", "5", "--from", "-1", "--to", "1",
            "--step", "0.5", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x,approx,true,error"
        assert len(lines) == 6
        x, approx, true, err = map(float, lines[4].split(","))
        assert x == 0.5
        assert approx == pytest.approx(true + err, abs=1e-6)


class TestEval:
    def test_kfold_json(self, runner, toy_csv, tmp_path):
        out = tmp_path / "metrics.json"
        result = runner.invoke(main, [
            "eval", "--data", str(toy_csv), "--k", "3", "--iterations", "8",
            "--batch-size", "8", "--backend", "plaintext", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert payload["k"] == 3
        assert len(payload["fold_scores"]) == 3


class TestRunParty:
    def test_data_required_in_horizontal(self, runner, tmp_path):
        cfg = tmp_path / "party.json"
        cfg.write_text(json.dumps({"party_id": 1, "peers": ["h:1", "h:2", "h:3"]}))
        result = runner.invoke(main, ["run-party", "--config", str(cfg)])
        assert result.exit_code != 0
        assert "requires --data" in result.output

    def test_dealer_party0_needs_data(self, runner, tmp_path):
        cfg = tmp_path / "party.json"
        cfg.write_text(json.dumps({"party_id": 0, "peers": ["h:1", "h:2", "h:3"]}))
        result = runner.invoke(main, ["run-party", "--config", str(cfg),
                                      "--partition", "dealer"])
        assert result.exit_code != 0
        assert "party 0" in result.output


class TestColumns:
    def test_column_selection_flows_through(self, runner, toy_csv, tmp_path):
        names = tmp_path / "cols.txt"
        names.write_text("g0\ng2\n")
        model = tmp_path / "model.json"
        result = runner.invoke(main, [
            "simulate", "--data", str(toy_csv), "--iterations", "2",
            "--batch-size", "8", "--columns", str(names),
            "--model-out", str(model),
        ])
        assert result.exit_code == 0, result.output
        m = json.loads(model.read_text())
        assert m["feature_names"] == ["g0", "g2"]
        assert len(m["weights"]) == 2
