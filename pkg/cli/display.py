"""
Terminal rendering of catalogs, reports and profiles
"""

import logging
from typing import Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from cli.report import Report
from emcheck.catalog import ExampleField
from emcheck.integrate import RadialProfile

logger = logging.getLogger(__name__)


def display_catalog_table(console: Console, entries: Sequence[ExampleField]):
    """Display the example catalog"""
    table = Table(title="Example Catalog", show_header=True, header_style="bold cyan")

    table.add_column("Key", style="cyan", width=4)
    table.add_column("Name", style="green")
    table.add_column("Space", style="blue")
    table.add_column("(k, p)", justify="right")
    table.add_column("Tags", style="magenta")
    table.add_column("Valid region", style="yellow")
    table.add_column("Description")

    for entry in entries:
        table.add_row(
            entry.key,
            entry.name,
            entry.space.label,
            f"({entry.cfg.k}, {entry.cfg.p:g})",
            ", ".join(sorted(entry.tags)),
            entry.region_label,
            entry.description,
        )

    console.print(table)


def display_report(console: Console, report: Report):
    """Display one row per check and an overall verdict"""
    table = Table(title=f"{report.kind.capitalize()} Checks", show_header=True, header_style="bold cyan")

    table.add_column("Check", style="cyan")
    table.add_column("Max residual", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Result", justify="center")

    for record in report.records:
        if record.passed:
            result = "[yellow]inconclusive[/yellow]" if record.inconclusive else "[green]pass[/green]"
        else:
            result = "[red]FAIL[/red]"
        table.add_row(record.name, f"{record.max_residual:.3e}", f"{record.tolerance:.1e}", result)

    console.print(table)

    verdict = "[green]all checks passed[/green]" if report.passed else (
        f"[red]{len(report.failures)} of {len(report.records)} checks failed[/red]"
    )
    console.print(Panel(verdict, border_style="green" if report.passed else "red", padding=(0, 2)))


def display_profile(console: Console, name: str, profile: RadialProfile, max_rows: int = 12):
    """Display a radial profile, thinned to at most ``max_rows`` radii"""
    table = Table(
        title=f"{name} on {profile.space_label} (exponent {profile.exponent:g}, Lambda {profile.Lambda:.6g})",
        show_header=True,
        header_style="bold cyan",
    )
    columns = profile.columns()
    for column in columns:
        table.add_column(column, justify="right")

    step = max(1, profile.radii.size // max_rows)
    for i in range(0, profile.radii.size, step):
        table.add_row(*(f"{values[i]:.6g}" for values in columns.values()))

    console.print(table)
    if profile.violations:
        console.print(f"[red]{len(profile.violations)} monotonicity violations[/red]")
