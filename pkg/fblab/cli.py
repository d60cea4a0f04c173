"""fblab CLI using Click."""

from __future__ import annotations

import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import TypeVar

import click

from .cli_types import ExperimentArgs, ShowConfigArgs
from .commands import (
    cmd_curvature_sweep,
    cmd_exact_validate,
    cmd_monotonicity_audit,
    cmd_show_config,
    cmd_theta_sweep,
)
from .exceptions import FbLabError, UserError
from .log import configure_structlog

# Module logger
logger = logging.getLogger("fblab")

A = TypeVar("A")


def setup_logging(debug: bool = False) -> None:
    """Configure logging for the CLI."""
    level = logging.DEBUG if debug else logging.WARNING
    logger.setLevel(level)
    if any(
        isinstance(h, logging.StreamHandler) and getattr(h, "stream", None) is sys.stderr
        for h in logger.handlers
    ):
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.addHandler(handler)


def experiment_options(func):
    """Decorator adding --config and --out to an experiment command."""
    func = click.option(
        "--out",
        required=True,
        type=click.Path(file_okay=False, path_type=Path),
        help="Output directory for CSV/JSON/SVG artifacts.",
    )(func)
    func = click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Experiment TOML file.",
    )(func)
    return func


def _run(command: Callable[[A], None], args: A) -> None:
    try:
        command(args)
    except UserError as e:
        click.echo(f"ERROR: {e}", err=True)
        sys.exit(e.rc)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="fblab", prog_name="fblab")
@click.option(
    "--debug",
    "-d",
    is_flag=True,
    help="Enable debug logging to stderr.",
)
@click.pass_context
def cli(ctx: click.Context, debug: bool):
    """fblab: monotone quantities of Bernoulli and capillary minimizers on grids."""
    ctx.ensure_object(dict)
    ctx.obj["debug"] = debug
    setup_logging(debug=debug)
    configure_structlog(debug=debug)


@cli.command("exact-validate")
@experiment_options
def exact_validate(config_path: Path, out: Path):
    """Density ratio and Weiss energy of half-plane models against (1 - cos theta)/2 and omega_n/2."""
    _run(cmd_exact_validate, ExperimentArgs(config=config_path, out=out))


@cli.command("monotonicity-audit")
@experiment_options
def monotonicity_audit(config_path: Path, out: Path):
    """Profiles and audits of Theta, W and their regularized versions on exact and solved fields."""
    _run(cmd_monotonicity_audit, ExperimentArgs(config=config_path, out=out))


@cli.command("theta-sweep")
@experiment_options
def theta_sweep(config_path: Path, out: Path):
    """Convergence gap between theta^-2 Theta and W / (2 omega_n) as theta decreases."""
    _run(cmd_theta_sweep, ExperimentArgs(config=config_path, out=out))


@cli.command("curvature-sweep")
@experiment_options
def curvature_sweep(config_path: Path, out: Path):
    """Curvature ratio |A| / sin(theta) near the wall across angles."""
    _run(cmd_curvature_sweep, ExperimentArgs(config=config_path, out=out))


@cli.command("show-config")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Experiment TOML file.",
)
def show_config(config_path: Path):
    """Print the validated configuration as sorted JSON."""
    _run(cmd_show_config, ShowConfigArgs(config=config_path))


def main():
    """Main entry point for the CLI."""
    try:
        cli()
    except UserError as e:
        click.echo(f"ERROR: {e}", err=True)
        sys.exit(e.rc)
    except FbLabError as e:
        click.echo(f"ERROR: {e}", err=True)
        sys.exit(2)
    except KeyboardInterrupt:
        click.echo("ERROR: Interrupted", err=True)
        sys.exit(130)
