"""Verification suite commands."""

import time

import click
from rich.table import Table

from genbound.commands import EXIT_CONFIG
from genbound.utils.display import console, fmt, print_logo, status_markup
from genbound.verification import SUITES


def suite_table(results) -> Table:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Suite")
    table.add_column("Checks", justify="right")
    table.add_column("Violations", justify="right")
    table.add_column("Min slack", justify="right")
    table.add_column("Status")
    for suite in SUITES:
        rows = [r for r in results if r.suite == suite]
        if not rows:
            continue
        failed = sum(not r.passed for r in rows)
        table.add_row(suite, str(len(rows)), str(failed), fmt(min(r.slack for r in rows)), status_markup(failed == 0))
    return table


@click.command()
@click.option("--suite", "-s", type=click.Choice(["all", *SUITES]), default="all", help="Suite to run")
@click.option("--seed", type=int, default=0, help="Seed for the randomized checks")
@click.option("--threads", "-t", type=int, default=None, help="Worker threads (default GENBOUND_THREADS)")
@click.option("--timing", is_flag=True, help="Record wall-clock time in the manifest")
@click.option("--show-all", is_flag=True, help="List every check, not only violations")
@click.pass_context
def verify(ctx, suite, seed, threads, timing, show_all):
    """Run proof-chain property suites on the built-in battery."""
    from genbound.commands.run import finish
    from genbound.errors import ConfigError
    from genbound.report import verify_manifest
    from genbound.verification import run_suite

    started = time.perf_counter() if timing else None
    try:
        results = run_suite(suite, seed=seed, threads=threads)
    except ConfigError as e:
        console.print(f"[red]Config error: {e}[/red]")
        ctx.exit(EXIT_CONFIG)

    console.print()
    print_logo()
    console.print(suite_table(results))
    shown = results if show_all else [r for r in results if not r.passed]
    for r in shown:
        colour = "green" if r.passed else "red"
        console.print(f"[{colour}]{r.suite}[/{colour}] {r.instance} [dim]{r.parameters}[/dim] slack={fmt(r.slack)}")

    manifest = verify_manifest(suite, seed, results, started)
    ctx.exit(finish(f"verify:{suite}", suite, manifest))
