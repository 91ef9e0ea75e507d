"""Assembling bound reports for a scenario and writing CSV, JSON and manifests."""

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from genbound import __version__
from genbound.bounds import BoundReport, bound_for
from genbound.config import MANIFEST_DIR, config_hash, ensure_data_dir
from genbound.errors import GenboundError
from genbound.scenarios import Scenario, materialize
from genbound.utils.display import get_logger
from genbound.utils.parallel import ordered_map

logger = get_logger(__name__)

REPORT_COLUMNS = ("scenario", "n", "divergence", "gen_true", "H_value", "dual_moment", "bound", "slack", "vacuous", "tol")


def number(value) -> str:
    """Shortest round-trip text for a float; infinities and NaN spelled out."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _plain(value):
    """JSON-safe copy with non-finite floats as strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return number(value)
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _plain(value.item())
    return value


def report_row(report: BoundReport) -> dict:
    return {
        "scenario": report.scenario,
        "n": report.n,
        "divergence": report.divergence,
        "gen_true": float(report.gen_true),
        "H_value": float(report.H_value),
        "dual_moment": float(report.dual_moment),
        "bound": float(report.bound),
        "slack": float(report.slack),
        "vacuous": report.vacuous,
        "tol": float(report.tol),
    }


@dataclass(frozen=True)
class CellFailure:
    scenario: str
    n: int
    divergence: str
    error: str


@dataclass
class ScenarioRun:
    scenario: Scenario
    reports: list[BoundReport] = field(default_factory=list)
    failures: list[CellFailure] = field(default_factory=list)

    @property
    def unsound(self) -> list[BoundReport]:
        return [r for r in self.reports if not r.sound]

    @property
    def passed(self) -> bool:
        return not self.failures and not self.unsound


def _cell(scenario: Scenario, instances: dict, n: int, name: str):
    try:
        if scenario.is_sgd:
            from genbound.sgd import SGDParams, bound_sgd_1d

            return bound_sgd_1d(SGDParams.from_dict(scenario.sgd), n, seed=scenario.seed, scenario_id=scenario.id)
        inst = instances[n]
        if isinstance(inst, CellFailure):
            return CellFailure(scenario.id, n, name, inst.error)
        return bound_for(inst, name)
    except GenboundError as e:
        logger.info("%s n=%d %s failed: %s", scenario.id, n, name, e)
        return CellFailure(scenario.id, n, name, str(e))


def run_scenario(scenario: Scenario, threads: int | None = None) -> ScenarioRun:
    """Every (n, divergence) cell of a scenario; a failing cell does not stop the run."""
    instances = {}
    if not scenario.is_sgd:
        for n in scenario.sizes:
            try:
                instances[n] = materialize(scenario, n)
            except GenboundError as e:
                logger.info("%s n=%d could not be built: %s", scenario.id, n, e)
                instances[n] = CellFailure(scenario.id, n, "*", str(e))
    names = (f"smoothed-kl:{scenario.sgd.get('sigma', 0.5):g}",) if scenario.is_sgd else scenario.divergences
    cells = [(n, name) for n in scenario.sizes for name in names]
    results = ordered_map(lambda cell: _cell(scenario, instances, *cell), cells, threads)

    run = ScenarioRun(scenario)
    for result in results:
        if isinstance(result, CellFailure):
            run.failures.append(result)
        else:
            run.reports.append(result)
    return run


def to_csv(reports: list[BoundReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for report in reports:
        row = report_row(report)
        writer.writerow([number(row[c]) for c in REPORT_COLUMNS])
    return buffer.getvalue()


def to_json(reports: list[BoundReport]) -> str:
    rows = []
    for report in reports:
        row = report_row(report)
        row["diagnostics"] = dict(sorted(report.diagnostics.items()))
        rows.append(row)
    return json.dumps(_plain(rows), indent=2) + "\n"


def rates_to_csv(rows: list[dict]) -> str:
    """Sweep rate table; columns follow the first row, extras from later rows appended."""
    columns = []
    for row in rows:
        columns += [c for c in row if c not in columns]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([number(row[c]) if c in row else "" for c in columns])
    return buffer.getvalue()


def write_reports(reports: list[BoundReport], out_dir: str | Path, stem: str, fmt: str = "csv") -> Path:
    """Write reports as ``<stem>.csv`` or ``<stem>.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{fmt}"
    path.write_text(to_csv(reports) if fmt == "csv" else to_json(reports))
    return path


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    checks: list[dict]
    version: str = __version__
    wall_clock: float | None = None

    @property
    def violations(self) -> list[dict]:
        return [c for c in self.checks if not c["passed"]]

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        data = {
            "command": self.command,
            "config_hash": self.config_hash,
            "version": self.version,
            "seed": self.seed,
            "checks": self.checks,
            "passed": self.passed,
            "violations": len(self.violations),
        }
        if self.wall_clock is not None:
            data["wall_clock"] = self.wall_clock
        return data

    def to_json(self) -> str:
        return json.dumps(_plain(self.as_dict()), indent=2, sort_keys=True) + "\n"


def run_manifest(command: str, config: dict, seed: int, runs: list[ScenarioRun], started: float | None = None) -> RunManifest:
    """Manifest of a run or sweep: one check per cell, failures included."""
    checks = []
    for run in runs:
        for report in run.reports:
            checks.append({
                "check": "soundness",
                "instance": report.scenario,
                "parameters": f"n={report.n} divergence={report.divergence}",
                "slack": float(report.slack),
                "tolerance": float(report.tol),
                "vacuous": report.vacuous,
                "passed": report.sound,
            })
        for failure in run.failures:
            checks.append({
                "check": "cell",
                "instance": failure.scenario,
                "parameters": f"n={failure.n} divergence={failure.divergence}",
                "error": failure.error,
                "passed": False,
            })
    wall = None if started is None else time.perf_counter() - started
    return RunManifest(command=command, config_hash=config_hash(config), seed=seed, checks=checks, wall_clock=wall)


def verify_manifest(suite: str, seed: int, results: list, started: float | None = None) -> RunManifest:
    checks = [r.as_dict() for r in results]
    wall = None if started is None else time.perf_counter() - started
    return RunManifest(command=f"verify:{suite}", config_hash=config_hash({"suite": suite, "seed": seed}), seed=seed, checks=checks, wall_clock=wall)


def write_manifest(manifest: RunManifest, directory: str | Path | None = None) -> Path:
    """Write the manifest as ``<command>-<hash prefix>-seed<seed>.json``."""
    if directory is None:
        ensure_data_dir()
        directory = MANIFEST_DIR
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = manifest.command.replace(":", "-")
    path = directory / f"{name}-{manifest.config_hash[:12]}-seed{manifest.seed}.json"
    path.write_text(manifest.to_json())
    return path
