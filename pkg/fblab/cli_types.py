"""Type definitions for CLI command arguments."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass
class ExperimentArgs:
    """Arguments for the experiment commands."""

    config: Path
    out: Path


@dataclass
class ShowConfigArgs:
    """Arguments for show-config command."""

    config: Path
