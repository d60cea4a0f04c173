"""Shared pytest fixtures for fblab tests."""

from __future__ import annotations

import json
import math
import tempfile
from collections.abc import Callable, Generator
from pathlib import Path

import pytest
import structlog
from fblab.cli_types import ExperimentArgs
from fblab.grid_field import GridDomain, make_grid
from fblab.log import configure_structlog

# Small 1D experiment: every solve finishes in well under a second.
BASE_CONFIG: dict = {
    "experiment": "exact-validate",
    "dim": 1,
    "half_width": 1.0,
    "nodes_per_axis": 64,
    "theta_list": [math.pi / 3],
    "radii_list": [0.3, 0.5],
    "centers": [[0.0]],
    "cutoff_eps": 0.1,
    "eps_hat": 0.05,
    "smoothing_schedule": [4.0, 2.0, 1.0],
    "initial_step": 0.001,
    "backtrack_factor": 0.5,
    "max_iterations": 2000,
    "tolerance": 1e-6,
    "boundary_offset": 0.0,
    "near_band": 0.5,
    "window_radius": 0.5,
    "ac_field": "",
    "capillary_field": "",
}


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return repr(value)


def toml_text(values: dict) -> str:
    return "".join(f"{key} = {_toml_value(value)}\n" for key, value in values.items())


@pytest.fixture(autouse=True)
def _structlog_to_stderr() -> Generator[None, None, None]:
    """Route structured logs to the current stderr for every test."""
    configure_structlog()
    yield
    structlog.reset_defaults()


@pytest.fixture
def tmp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as d:
        yield Path(d)


@pytest.fixture
def config_file(tmp_dir: Path) -> Callable[..., Path]:
    """Write an experiment TOML file; keyword arguments override BASE_CONFIG, None drops a key."""

    def write(name: str = "experiment.toml", **overrides) -> Path:
        values = {**BASE_CONFIG, **overrides}
        values = {k: v for k, v in values.items() if v is not None}
        path = tmp_dir / name
        path.write_text(toml_text(values))
        return path

    return write


@pytest.fixture
def experiment_args(tmp_dir: Path, config_file) -> Callable[..., ExperimentArgs]:
    """Args for an experiment command writing into tmp_dir/out."""

    def build(**overrides) -> ExperimentArgs:
        return ExperimentArgs(config=config_file(**overrides), out=tmp_dir / "out")

    return build


@pytest.fixture
def grid_2d() -> GridDomain:
    return make_grid(2, 1.0, 64)


@pytest.fixture
def grid_1d() -> GridDomain:
    return make_grid(1, 1.0, 128)


@pytest.fixture
def fine_grid() -> GridDomain:
    """Resolution used for the exact half-plane oracles."""
    return make_grid(2, 1.0, 256)
