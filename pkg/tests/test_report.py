"""Tests for report assembly, serialization and manifests."""

import csv
import io
import json
import math

import pytest

from genbound.bounds import BoundReport
from genbound.report import (
    REPORT_COLUMNS,
    CellFailure,
    number,
    rates_to_csv,
    run_manifest,
    run_scenario,
    to_csv,
    to_json,
    verify_manifest,
    write_manifest,
    write_reports,
)
from genbound.scenarios import builtin_config, scenario_from_config
from genbound.verification import CheckResult


def binary_scenario(divergences=("kl", "chi2")):
    config = builtin_config("binary", "gibbs:1", (1, 2))
    config["divergences"] = list(divergences)
    return config, scenario_from_config(config)


class TestNumber:
    @pytest.mark.parametrize(
        "value, text",
        [(0.1, "0.1"), (math.inf, "inf"), (-math.inf, "-inf"), (math.nan, "nan"), (True, "true"), (False, "false"), (3, "3")],
    )
    def test_text(self, value, text):
        assert number(value) == text

    def test_round_trip(self):
        value = 1 / 3
        assert float(number(value)) == value


class TestRunScenario:
    def test_cells(self):
        _, scenario = binary_scenario()
        run = run_scenario(scenario)
        assert [(r.n, r.divergence) for r in run.reports] == [(1, "kl"), (1, "chi2"), (2, "kl"), (2, "chi2")]
        assert run.passed

    def test_failing_cells_do_not_stop_the_run(self):
        _, scenario = binary_scenario(("kl", "wasserstein", "smoothed-kl:0.5"))
        run = run_scenario(scenario)
        assert [r.divergence for r in run.reports] == ["kl", "kl"]
        assert len(run.failures) == 4
        assert all(isinstance(f, CellFailure) for f in run.failures)
        assert [f.divergence for f in run.failures] == ["wasserstein", "smoothed-kl:0.5"] * 2
        assert all("embedding" in f.error for f in run.failures if f.divergence.startswith("smoothed"))
        assert not run.passed

    def test_threads_do_not_change_output(self):
        _, scenario = binary_scenario()
        assert to_csv(run_scenario(scenario, threads=1).reports) == to_csv(run_scenario(scenario, threads=3).reports)


class TestSerialization:
    def test_csv_columns(self):
        _, scenario = binary_scenario()
        text = to_csv(run_scenario(scenario).reports)
        rows = list(csv.reader(io.StringIO(text)))
        assert tuple(rows[0]) == REPORT_COLUMNS
        assert len(rows) == 5
        assert rows[1][0] == "binary-gibbs:1"
        assert rows[1][8] in ("true", "false")

    def test_infinite_bound_spelled_out(self):
        report = BoundReport("s", 1, "itakura-saito", -0.5, math.inf, 0.25, math.inf)
        row = to_csv([report]).splitlines()[1].split(",")
        assert row[4] == "inf" and row[6] == "inf"
        data = json.loads(to_json([report]))
        assert data[0]["bound"] == "inf"

    def test_json_deterministic(self):
        _, scenario = binary_scenario()
        reports = run_scenario(scenario).reports
        assert to_json(reports) == to_json(run_scenario(scenario).reports)
        assert json.loads(to_json(reports))[0]["divergence"] == "kl"

    def test_write_reports(self, tmp_path):
        _, scenario = binary_scenario()
        reports = run_scenario(scenario).reports
        path = write_reports(reports, tmp_path / "out", scenario.id, "json")
        assert path.name == "binary-gibbs:1.json"
        assert len(json.loads(path.read_text())) == 4

    def test_rates_csv_union_of_columns(self):
        text = rates_to_csv([{"n": 1, "bound": 0.5}, {"n": 2, "bound": 0.25, "mc_gen": 0.1}])
        assert text.splitlines() == ["n,bound,mc_gen", "1,0.5,", "2,0.25,0.1"]


class TestManifests:
    def test_run_manifest(self):
        config, scenario = binary_scenario(("kl", "wasserstein"))
        manifest = run_manifest("run", config, scenario.seed, [run_scenario(scenario)])
        checks = [c["check"] for c in manifest.checks]
        assert checks == ["soundness", "soundness", "cell", "cell"]
        assert not manifest.passed
        assert len(manifest.violations) == 2
        data = manifest.as_dict()
        assert "wall_clock" not in data
        assert data["violations"] == 2

    def test_timing_recorded_on_request(self):
        config, scenario = binary_scenario()
        manifest = run_manifest("run", config, scenario.seed, [run_scenario(scenario)], started=0.0)
        assert manifest.wall_clock is not None
        assert "wall_clock" in manifest.as_dict()

    def test_manifest_json_is_canonical(self):
        config, scenario = binary_scenario()
        first = run_manifest("run", config, 0, [run_scenario(scenario)]).to_json()
        second = run_manifest("run", config, 0, [run_scenario(scenario)]).to_json()
        assert first == second
        assert json.loads(first)["passed"] is True

    def test_write_manifest(self, home):
        config, scenario = binary_scenario()
        manifest = run_manifest("run", config, 0, [run_scenario(scenario)])
        path = write_manifest(manifest)
        assert path.parent == home / "manifests"
        assert path.name == f"run-{manifest.config_hash[:12]}-seed0.json"

    def test_verify_manifest(self, tmp_path):
        results = [CheckResult("lemma7", "series", "d=1", 0.0, 1e-12), CheckResult("lemma7", "series", "d=2", -1.0, 1e-12)]
        manifest = verify_manifest("lemma7", 3, results)
        assert manifest.command == "verify:lemma7"
        assert len(manifest.violations) == 1
        path = write_manifest(manifest, tmp_path)
        assert path.name.startswith("verify-lemma7-") and path.name.endswith("-seed3.json")
