"""Built-in scenario and settings commands."""

import json

import click
from rich.table import Table

from genbound.commands import EXIT_CONFIG
from genbound.utils.display import console


@click.command()
@click.option("--export", "export_dir", type=click.Path(file_okay=False), default=None, help="Write every config as JSON here")
@click.option("--seed", type=int, default=0)
def scenarios(export_dir, seed):
    """List the built-in battery and the SGD scenario."""
    from pathlib import Path

    from genbound.scenarios import BATTERY_ALGORITHMS, BATTERY_SIZES, INSTANCE_SPECS, builtin_config

    configs = [builtin_config(instance, algorithm, BATTERY_SIZES, seed) for instance in INSTANCE_SPECS for algorithm in BATTERY_ALGORITHMS]
    configs.append({
        "id": "sgd1d-gaussian",
        "algorithm": "sgd1d",
        "n_sweep": [4, 8, 16, 32, 64],
        "seed": seed,
        "sgd": {"sigma": 0.5},
    })

    table = Table(show_header=True, header_style="bold")
    table.add_column("ID")
    table.add_column("Algorithm")
    table.add_column("Loss")
    table.add_column("n")
    for config in configs:
        sizes = ", ".join(str(n) for n in config["n_sweep"])
        table.add_row(config["id"], config["algorithm"], config.get("loss", "quadratic (1-D Gaussian)"), sizes)
    console.print(table)

    if export_dir:
        out = Path(export_dir)
        out.mkdir(parents=True, exist_ok=True)
        for config in configs:
            (out / f"{config['id']}.json").write_text(json.dumps(config, indent=2) + "\n")
        console.print(f"[green]Wrote {len(configs)} configs to {out}[/green]")


@click.group()
def settings():
    """Show or change tunables (tolerances, solver, quadrature)."""
    pass


@settings.command("show")
def settings_show():
    """Print the effective settings."""
    from genbound.config import CONFIG_PATH, load_config

    console.print_json(json.dumps(load_config()))
    console.print(f"[dim]{CONFIG_PATH}[/dim]")


@settings.command("set")
@click.argument("key")
@click.argument("value", type=float)
@click.pass_context
def settings_set(ctx, key, value):
    """Persist a numeric setting such as tolerances.chain."""
    from genbound.config import set_setting
    from genbound.errors import ConfigError

    try:
        set_setting(key, int(value) if value.is_integer() and key.endswith(("max_iters", "samples", "max_halvings")) else value)
    except ConfigError as e:
        console.print(f"[red]{e}[/red]")
        ctx.exit(EXIT_CONFIG)
    console.print(f"[green]{key} = {value:g}[/green]")
