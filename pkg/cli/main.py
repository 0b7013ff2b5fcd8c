#!/usr/bin/env python3
"""
emcheck CLI - numerical checks of energy-momentum identities

Main entry point with Click commands.
"""

import sys
import logging
from pathlib import Path

import click
from pydantic import ValidationError
from rich.console import Console

from emcheck import __version__
from emcheck.catalog import catalog
from emcheck.errors import EmcheckError, UsageError
from cli.display import display_catalog_table, display_profile, display_report
from cli.runner import run_pointwise, run_profile, write_summary
from cli.settings import RadiusGrid, SpaceSettings, load_run_config

# Set up logging
logging.basicConfig(
    level=logging.WARNING,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

console = Console()

EXIT_FAILED = 1
EXIT_USAGE = 2


def _parse_floats(text):
    return [float(part) for part in text.split(',')]


def _overrides(suite, example, space, kp, center, radii, nodes, seed, out, points):
    """Translate command-line flags into RunConfig overrides"""
    overrides = {
        'suite': suite,
        'examples': list(example) if example else None,
        'space': SpaceSettings.parse(space) if space else None,
        'center': _parse_floats(center) if center else None,
        'radii': RadiusGrid.parse(radii) if radii else None,
        'seed': seed,
        'out': out,
        'points': points,
    }
    if kp:
        k, p = kp.split(',')
        overrides['k'] = int(k)
        overrides['p'] = float(p)
    if nodes:
        overrides['quadrature'] = {
            'radial_nodes': nodes,
            'sphere_nodes': nodes,
            'periodic_nodes': 2 * nodes,
        }
    return overrides


def _fail(ctx, error):
    """Report an error and exit with the matching code"""
    console.print(f"[red]Error: {error}[/red]")
    if ctx.obj['VERBOSE']:
        raise error
    sys.exit(EXIT_USAGE if isinstance(error, UsageError) else EXIT_FAILED)


def run_options(f):
    """Flags shared by the pointwise and profile commands"""
    options = [
        click.option('--example', '-e', multiple=True, help='Catalog example name or key (repeatable)'),
        click.option('--space', help='euclidean:n or hyperbolic:n[:kappa] for random fields'),
        click.option('--kp', help='Form degree and exponent as k,p'),
        click.option('--center', help='Ball center as comma-separated coordinates'),
        click.option('--radii', help='Radius grid min:max:count[:log]'),
        click.option('--nodes', type=int, help='Quadrature nodes per radial and latitude axis'),
        click.option('--seed', type=int, envvar='EMCHECK_SEED', help='Random seed (default: 0)'),
        click.option('--out', type=click.Path(path_type=Path), envvar='EMCHECK_OUT',
                     help='Output directory (default: emcheck-out)'),
        click.option('--points', type=int, help='Sample points per pointwise check (default: 100)'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


@click.group()
@click.pass_context
@click.option(
    '--config',
    'config_path',
    type=click.Path(path_type=Path),
    help='JSON run configuration; flags override its values'
)
@click.option(
    '--verbose', '-v',
    is_flag=True,
    help='Enable verbose logging'
)
def cli(ctx, config_path, verbose):
    """
    emcheck - verify energy-momentum identities numerically

    \b
    Examples:
        emcheck pointwise --suite conservation --example d
        emcheck profile --example b --radii 0.2:2:20
        emcheck catalog
    """
    # Set up logging level
    if verbose:
        logging.getLogger('cli').setLevel(logging.DEBUG)
        logging.getLogger('emcheck').setLevel(logging.DEBUG)
        logging.getLogger().setLevel(logging.INFO)

    # Store in context for subcommands
    ctx.ensure_object(dict)
    ctx.obj['CONFIG_PATH'] = config_path
    ctx.obj['VERBOSE'] = verbose


@cli.command()
@click.pass_context
@click.option('--suite', '-s', help='Suite to run, or "all" (default)')
@run_options
def pointwise(ctx, suite, example, space, kp, center, radii, nodes, seed, out, points):
    """Run pointwise identity suites"""
    try:
        config = load_run_config(ctx.obj['CONFIG_PATH']).with_overrides(
            **_overrides(suite, example, space, kp, center, radii, nodes, seed, out, points)
        )
        console.print(f"[bold]Running pointwise suites: {', '.join(config.selected_suites)}[/bold]")
        report = run_pointwise(config)
        display_report(console, report)
        path = write_summary(report, Path(config.out) / "pointwise_summary.json", config.include_runtime)
        console.print(f"Summary written to {path}")
        sys.exit(0 if report.passed else EXIT_FAILED)

    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        sys.exit(0)
    except (EmcheckError, ValidationError, ValueError) as e:
        _fail(ctx, e)


@cli.command()
@click.pass_context
@click.option('--identity/--no-identity', default=None, help='Also evaluate the monotonicity identity')
@run_options
def profile(ctx, identity, example, space, kp, center, radii, nodes, seed, out, points):
    """Compute monotone profiles and write them as CSV"""
    try:
        overrides = _overrides(None, example, space, kp, center, radii, nodes, seed, out, points)
        overrides['with_identity'] = identity
        config = load_run_config(ctx.obj['CONFIG_PATH']).with_overrides(**overrides)
        console.print("[bold]Computing profiles...[/bold]")
        report = run_profile(config)
        for name, radial in report.profiles.items():
            display_profile(console, name, radial)
        display_report(console, report)
        console.print(f"Profiles written to {config.out}")
        sys.exit(0 if report.passed else EXIT_FAILED)

    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        sys.exit(0)
    except (EmcheckError, ValidationError, ValueError) as e:
        _fail(ctx, e)


@cli.command(name='catalog')
@click.pass_context
def catalog_command(ctx):
    """List the example catalog"""
    try:
        display_catalog_table(console, catalog())
    except EmcheckError as e:
        _fail(ctx, e)


@cli.command()
def version():
    """Show version information"""
    console.print(f"emcheck version {__version__}")


if __name__ == '__main__':
    cli()
