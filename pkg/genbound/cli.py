"""Command-line interface."""

import click

from genbound.utils.display import setup_logging


@click.group()
@click.version_option(package_name="genbound")
@click.option("--verbose", "-v", is_flag=True, help="Log solver and guard decisions")
def cli(verbose):
    """genbound - exact generalization-bound laboratory."""
    if verbose:
        setup_logging("INFO")


# Import and register command groups
from genbound.commands.history import history
from genbound.commands.run import run
from genbound.commands.scenarios import scenarios, settings
from genbound.commands.sweep import sweep
from genbound.commands.verify import verify

cli.add_command(run)
cli.add_command(verify)
cli.add_command(sweep)
cli.add_command(scenarios)
cli.add_command(settings)
cli.add_command(history)


if __name__ == "__main__":
    cli()
