"""Tests for the command-line interface."""

import json

import pytest
from click.testing import CliRunner

from genbound.cli import cli
from genbound.commands import EXIT_CONFIG, EXIT_OK
from genbound.scenarios import builtin_config


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def binary_path(tmp_path):
    config = builtin_config("binary", "gibbs:1", (1, 2))
    config["divergences"] = ["kl", "chi2"]
    path = tmp_path / "binary.json"
    path.write_text(json.dumps(config))
    return path


class TestRun:
    def test_writes_report_and_manifest(self, runner, home, binary_path, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(cli, ["run", "-c", str(binary_path), "-o", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert (out / "binary-gibbs:1.csv").exists()
        manifests = list((home / "manifests").glob("run-*-seed0.json"))
        assert len(manifests) == 1
        assert "wall_clock" not in json.loads(manifests[0].read_text())

    def test_json_format(self, runner, home, binary_path, tmp_path):
        result = runner.invoke(cli, ["run", "-c", str(binary_path), "-o", str(tmp_path), "-f", "json"])
        assert result.exit_code == EXIT_OK
        assert len(json.loads((tmp_path / "binary-gibbs:1.json").read_text())) == 4

    def test_bad_config(self, runner, home, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"id": "x", "algorithm": "adam"}))
        result = runner.invoke(cli, ["run", "-c", str(path)])
        assert result.exit_code == EXIT_CONFIG
        assert "Config error" in result.output

    def test_missing_config(self, runner, home, tmp_path):
        result = runner.invoke(cli, ["run", "-c", str(tmp_path / "nope.json")])
        assert result.exit_code == EXIT_CONFIG


class TestSweep:
    def test_sgd_sweep(self, runner, home, tmp_path):
        path = tmp_path / "sgd.json"
        path.write_text(json.dumps({"id": "sgd-small", "algorithm": "sgd1d", "n_sweep": [4, 8, 16], "sgd": {"runs": 2000}}))
        result = runner.invoke(cli, ["sweep", "-c", str(path), "-o", str(tmp_path)])
        assert result.exit_code == EXIT_OK, result.output
        header = (tmp_path / "sgd-small-rates.csv").read_text().splitlines()[0]
        assert header.startswith("divergence,n,gen_true,bound,rate_factor,bound_over_rate")
        assert "mc_gen" in header
        assert (tmp_path / "sgd-small-sweep.csv").exists()


class TestVerify:
    def test_lemma7(self, runner, home):
        result = runner.invoke(cli, ["verify", "--suite", "lemma7"])
        assert result.exit_code == EXIT_OK, result.output
        assert list((home / "manifests").glob("verify-lemma7-*.json"))

    def test_unknown_suite(self, runner, home):
        result = runner.invoke(cli, ["verify", "--suite", "lemma99"])
        assert result.exit_code == 2


class TestHistory:
    def test_empty(self, runner, home):
        result = runner.invoke(cli, ["history"])
        assert result.exit_code == 0
        assert "No runs recorded yet." in result.output

    def test_after_run(self, runner, home, binary_path, tmp_path):
        runner.invoke(cli, ["run", "-c", str(binary_path), "-o", str(tmp_path)])
        result = runner.invoke(cli, ["history", "--command", "run"])
        assert "binary-gibbs:1" in result.output
        assert "No runs recorded yet." not in result.output


class TestScenarios:
    def test_export(self, runner, tmp_path):
        result = runner.invoke(cli, ["scenarios", "--export", str(tmp_path)])
        assert result.exit_code == 0
        files = sorted(tmp_path.glob("*.json"))
        assert len(files) == 22
        assert json.loads((tmp_path / "sgd1d-gaussian.json").read_text())["algorithm"] == "sgd1d"


class TestSettings:
    def test_set_and_show(self, runner, home):
        result = runner.invoke(cli, ["settings", "set", "tolerances.chain", "1e-6"])
        assert result.exit_code == 0
        assert json.loads((home / "config.json").read_text())["tolerances"]["chain"] == 1e-6
        result = runner.invoke(cli, ["settings", "show"])
        assert result.exit_code == 0
        assert "tolerances" in result.output

    def test_unknown_key(self, runner, home):
        result = runner.invoke(cli, ["settings", "set", "tolerances.bogus", "1"])
        assert result.exit_code == EXIT_CONFIG
