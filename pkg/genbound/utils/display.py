"""Display utilities - console, logo, logging, number formatting."""

import logging
import math
import os

from rich.console import Console
from rich.logging import RichHandler

console = Console()
err_console = Console(stderr=True)

LOGO = "[green][■■■□□] genbound[/green]"

_configured = False


def print_logo():
    """Print the genbound logo."""
    console.print(LOGO)


def setup_logging(level: str | int | None = None):
    """Route the ``genbound`` logger through a rich handler on stderr."""
    global _configured
    if level is None:
        level = os.environ.get("GENBOUND_LOG_LEVEL", "WARNING")
    root = logging.getLogger("genbound")
    if not _configured:
        handler = RichHandler(console=err_console, show_path=False, markup=False)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(level)


def get_logger(name: str) -> logging.Logger:
    """Logger under the ``genbound`` namespace."""
    setup_logging()
    return logging.getLogger(name)


def fmt(value: float, digits: int = 6) -> str:
    """Compact number for tables; infinities spelled out."""
    if value is None:
        return "-"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.{digits}g}"


def status_markup(passed: bool) -> str:
    return "[green]pass[/green]" if passed else "[red]FAIL[/red]"
