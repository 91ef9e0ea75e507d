"""Sample-size sweep commands."""

import time

import click
from rich.table import Table

from genbound.utils.display import console, fmt


def rate_rich_table(rows) -> Table:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Divergence")
    table.add_column("n", justify="right")
    table.add_column("gen", justify="right")
    table.add_column("Bound", justify="right")
    table.add_column("Rate factor", justify="right")
    table.add_column("Bound/rate", justify="right")
    has_mc = any("mc_gen" in r for r in rows)
    if has_mc:
        table.add_column("MC gen", justify="right")
        table.add_column("3σ CI", justify="right")
    for r in rows:
        cells = [r["divergence"], str(r["n"]), fmt(r["gen_true"]), fmt(r["bound"]), fmt(r["rate_factor"]), fmt(r["bound_over_rate"])]
        if has_mc:
            cells += [fmt(r.get("mc_gen")), fmt(r.get("mc_ci"))]
        table.add_row(*cells)
    return table


@click.command()
@click.option("--config", "-c", "config_path", required=True, help="Scenario config with n_sweep (JSON)")
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--threads", "-t", type=int, default=None, help="Worker threads (default GENBOUND_THREADS)")
@click.option("--timing", is_flag=True, help="Record wall-clock time in the manifest")
@click.pass_context
def sweep(ctx, config_path, out_dir, threads, timing):
    """Bounds across the sample sizes of a scenario, with log-log rate columns."""
    from pathlib import Path

    from genbound.commands.run import finish, load_or_exit, print_failures
    from genbound.config import REPORT_DIR
    from genbound.report import rates_to_csv, run_manifest, run_scenario, to_csv
    from genbound.utils.analysis import decay_flags, rate_table, shape_within_band

    started = time.perf_counter() if timing else None
    config, scenario = load_or_exit(ctx, config_path)

    result = run_scenario(scenario, threads)
    rows = rate_table(result.reports)
    console.print(f"\n[bold]{scenario.id}[/bold] [dim]n = {', '.join(str(n) for n in scenario.sizes)}[/dim]\n")
    console.print(rate_rich_table(rows))
    print_failures(result)

    for name, decreasing in decay_flags(rows).items():
        marker = "[green]decreasing[/green]" if decreasing else "[yellow]not monotone[/yellow]"
        console.print(f"  {name}: {marker}")

    out = Path(out_dir or REPORT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{scenario.id}-sweep.csv").write_text(to_csv(result.reports))
    (out / f"{scenario.id}-rates.csv").write_text(rates_to_csv(rows))
    console.print(f"[dim]Rate table: {out / f'{scenario.id}-rates.csv'}[/dim]")

    manifest = run_manifest("sweep", config, scenario.seed, [result], started)
    if scenario.is_sgd:
        shape_ok = shape_within_band(rows)
        manifest.checks.append({
            "check": "shape",
            "instance": scenario.id,
            "parameters": "bound/sqrt(sum eta^2) within factor 2 of smallest n",
            "passed": shape_ok,
        })
    ctx.exit(finish("sweep", scenario.id, manifest))
