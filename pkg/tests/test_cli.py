"""CLI contract: exit codes, reproducibility, output locations."""

import json

import numpy as np
import pytest

from dpsynth.cli import main
from dpsynth.data import GroupedDataset, save_grouped_csv


@pytest.fixture()
def toy_csv(tmp_path):
    g = np.random.default_rng(1)
    data = GroupedDataset(np.repeat([0, 1], 150), g.normal(50, 2, 300))
    path = tmp_path / "toy.csv"
    save_grouped_csv(data, path)
    return path


@pytest.fixture()
def experiment_config(tmp_path):
    payload = {
        "generator": {"kind": "gaussian", "mode": "null"},
        "synthesizer": "perturbed",
        "epsilons": [0.5, 5.0],
        "original_sizes": [100],
        "repetitions": 8,
        "seed": 11,
        "min_feasible": 5,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestExitCodes:
    def test_unknown_method_is_usage_error(self, toy_csv, tmp_path, capsys):
        code = main(
            ["synth", "--input", str(toy_csv), "--method", "dp-gan", "--epsilon", "1", "--out", str(tmp_path / "x.csv")]
        )
        assert code == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_missing_required_flag_is_usage_error(self):
        assert main(["synth"]) == 1

    def test_unknown_subcommand_is_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_missing_input_file_is_data_error(self, tmp_path, capsys):
        code = main(
            ["synth", "--input", str(tmp_path / "nope.csv"), "--method", "perturbed", "--epsilon", "1", "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2

    def test_malformed_config_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        payload = {
            "generator": {"kind": "gaussian", "mode": "null"},
            "synthesizer": "perturbed",
            "epsilons": "many",
            "original_sizes": [100],
        }
        path.write_text(json.dumps(payload), encoding="utf-8")
        assert main(["experiment", "--config", str(path)]) == 2
        assert "epsilons" in capsys.readouterr().err

    def test_smoothed_without_m_is_config_error(self, toy_csv, tmp_path):
        code = main(
            ["synth", "--input", str(toy_csv), "--method", "smoothed", "--epsilon", "1", "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2


class TestSynthCommand:
    def test_smoothed_writes_exactly_m_rows(self, toy_csv, tmp_path, capsys):
        out = tmp_path / "syn.csv"
        code = main(
            [
                "synth",
                "--input", str(toy_csv),
                "--method", "smoothed",
                "--epsilon", "1",
                "--m", "500",
                "--binning", "gaussian100",
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert len(out.read_text().strip().splitlines()) == 501
        sidecar = json.loads((tmp_path / "syn.csv.provenance.json").read_text())
        assert sidecar["method"] == "smoothed"
        assert sidecar["synthetic_n"] == 500
        header = capsys.readouterr().out
        assert "# seed: 3" in header

    def test_seed_resolved_and_printed_when_omitted(self, toy_csv, tmp_path, capsys):
        out = tmp_path / "syn.csv"
        code = main(
            ["synth", "--input", str(toy_csv), "--method", "perturbed", "--epsilon", "5", "--binning", "gaussian100", "--out", str(out)]
        )
        assert code == 0
        assert "# seed: " in capsys.readouterr().out


class TestTestCommands:
    def test_classical_test_outputs_json(self, toy_csv, capsys):
        assert main(["test", "--input", str(toy_csv), "--test", "mw_u"]) == 0
        line = capsys.readouterr().out.strip().splitlines()[-1]
        payload = json.loads(line)
        assert payload["feasible"] is True

    def test_dp_test_outputs_json(self, toy_csv, capsys):
        code = main(
            ["dp-test", "--input", str(toy_csv), "--epsilon", "1", "--null-samples", "1000", "--seed", "2"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert 0.0 < payload["p_value"] <= 1.0


class TestExperimentCommand:
    def test_reports_byte_identical_across_runs(self, experiment_config, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["experiment", "--config", str(experiment_config), "--seed", "7", "--out", str(out_a)]) == 0
        assert main(["experiment", "--config", str(experiment_config), "--seed", "7", "--out", str(out_b)]) == 0
        assert (out_a / "reports.csv").read_bytes() == (out_b / "reports.csv").read_bytes()

    def test_outputs_under_env_outdir(self, experiment_config, tmp_path, monkeypatch):
        monkeypatch.setenv("DPSYNTH_OUTDIR", str(tmp_path / "envout"))
        assert main(["experiment", "--config", str(experiment_config), "--out", "results"]) == 0
        assert (tmp_path / "envout" / "results" / "reports.csv").is_file()

    def test_report_rerender(self, experiment_config, tmp_path):
        out = tmp_path / "run"
        assert main(["experiment", "--config", str(experiment_config), "--out", str(out)]) == 0
        re_out = tmp_path / "re"
        code = main(
            ["report", "--reports", str(out / "reports.json"), "--formats", "csv,svg", "--out", str(re_out)]
        )
        assert code == 0
        assert (re_out / "reports.csv").read_bytes() == (out / "reports.csv").read_bytes()
