"""Show-config: print the validated experiment configuration."""

from __future__ import annotations

import json

import click

from ..cli_types import ShowConfigArgs
from ..config import load_experiment_config, validate_preconditions


def cmd_show_config(args: ShowConfigArgs) -> None:
    """Echo the config as sorted JSON after the same checks an experiment runs."""
    config = load_experiment_config(args.config)
    validate_preconditions(config)
    click.echo(json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2))
