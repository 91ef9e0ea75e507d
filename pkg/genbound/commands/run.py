"""Scenario run commands."""

import time

import click
from rich.table import Table

from genbound.commands import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION
from genbound.utils.display import console, fmt


def load_or_exit(ctx, config_path):
    """Load and build a scenario, exiting with the config status on failure."""
    from genbound.config import load_scenario_config
    from genbound.errors import GenboundError
    from genbound.scenarios import scenario_from_config

    try:
        config = load_scenario_config(config_path)
        return config, scenario_from_config(config)
    except GenboundError as e:
        console.print(f"[red]Config error: {e}[/red]")
        ctx.exit(EXIT_CONFIG)


def bound_table(reports) -> Table:
    table = Table(show_header=True, header_style="bold")
    table.add_column("n", justify="right")
    table.add_column("Divergence")
    table.add_column("gen", justify="right")
    table.add_column("H", justify="right")
    table.add_column("E‖ℓ̄‖²", justify="right")
    table.add_column("Bound", justify="right")
    table.add_column("Slack", justify="right")
    table.add_column("Status")
    for r in reports:
        if r.vacuous:
            status = "[yellow]vacuous[/yellow]"
        elif r.sound:
            status = "[green]sound[/green]"
        else:
            status = "[red]VIOLATION[/red]"
        table.add_row(str(r.n), r.divergence, fmt(r.gen_true), fmt(r.H_value), fmt(r.dual_moment), fmt(r.bound), fmt(r.slack), status)
    return table


def print_failures(run):
    for f in run.failures:
        console.print(f"[red]n={f.n} {f.divergence}: {f.error}[/red]")


def finish(command, target, manifest):
    """Write the manifest, log the ledger row and return the exit status."""
    from genbound.db import record_run
    from genbound.report import write_manifest

    path = write_manifest(manifest)
    record_run(
        command=command,
        target=target,
        config_hash=manifest.config_hash,
        seed=manifest.seed,
        checks=len(manifest.checks),
        violations=len(manifest.violations),
        manifest_path=str(path),
        version=manifest.version,
    )
    console.print(f"[dim]Manifest: {path}[/dim]")
    if manifest.passed:
        console.print(f"[green]{len(manifest.checks)} checks passed[/green]")
        return EXIT_OK
    console.print(f"[red]{len(manifest.violations)} of {len(manifest.checks)} checks failed[/red]")
    return EXIT_VIOLATION


@click.command()
@click.option("--config", "-c", "config_path", required=True, help="Scenario config (JSON)")
@click.option("--format", "-f", "out_format", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--threads", "-t", type=int, default=None, help="Worker threads (default GENBOUND_THREADS)")
@click.option("--timing", is_flag=True, help="Record wall-clock time in the manifest")
@click.pass_context
def run(ctx, config_path, out_format, out_dir, threads, timing):
    """Compute every bound of a scenario and write the report."""
    from genbound.config import REPORT_DIR
    from genbound.report import run_manifest, run_scenario, write_reports

    started = time.perf_counter() if timing else None
    config, scenario = load_or_exit(ctx, config_path)

    result = run_scenario(scenario, threads)
    console.print(f"\n[bold]{scenario.id}[/bold] [dim]{scenario.algorithm}[/dim]\n")
    console.print(bound_table(result.reports))
    print_failures(result)

    path = write_reports(result.reports, out_dir or REPORT_DIR, scenario.id, out_format)
    console.print(f"[dim]Report: {path}[/dim]")
    manifest = run_manifest("run", config, scenario.seed, [result], started)
    ctx.exit(finish("run", scenario.id, manifest))
