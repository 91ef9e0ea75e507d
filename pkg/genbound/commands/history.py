"""Run ledger commands."""

import click
from rich.table import Table

from genbound.utils.display import console


@click.command()
@click.option("--limit", "-n", type=int, default=20, help="Rows to show")
@click.option("--command", "-c", "command_filter", default=None, help="Only run, sweep or verify")
@click.option("--failed", is_flag=True, help="Only runs with violations")
def history(limit, command_filter, failed):
    """Show recent runs, sweeps and verifications."""
    from genbound.db import get_runs

    rows = get_runs(command=command_filter, failed_only=failed, limit=limit)
    if not rows:
        console.print("[dim]No runs recorded yet.[/dim]")
        return

    table = Table(show_header=True, header_style="bold")
    table.add_column("ID", justify="right")
    table.add_column("When", width=19)
    table.add_column("Command")
    table.add_column("Target")
    table.add_column("Seed", justify="right")
    table.add_column("Checks", justify="right")
    table.add_column("Status")
    for row in rows:
        if row["passed"]:
            status = "[green]pass[/green]"
        else:
            status = f"[red]{row['violations']} failed[/red]"
        table.add_row(
            str(row["id"]),
            row["timestamp"][:19].replace("T", " "),
            row["command"],
            row["target"],
            str(row["seed"]),
            str(row["checks"]),
            status,
        )
    console.print(table)
