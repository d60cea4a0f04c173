"""fblab experiment configuration loading and precondition checks."""

from __future__ import annotations

import logging
import math
import tomllib
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import ENV_PREFIX, MIN_QUANTITY_RADIUS_CELLS, RIGHT_ANGLE
from .exceptions import ConfigError, DomainError, ParameterError, ResolutionError
from .grid_field import GridDomain, make_grid
from .monotone import Cutoff
from .solvers import SolveParams

logger = logging.getLogger(__name__)

ExperimentName = Literal["exact-validate", "monotonicity-audit", "theta-sweep", "curvature-sweep"]


class ExperimentConfig(BaseModel):
    """One experiment run. Every key is required so the file is the full record."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: ExperimentName
    dim: int
    half_width: float
    nodes_per_axis: int
    theta_list: list[float] = Field(min_length=1)
    radii_list: list[float] = Field(min_length=1)
    centers: list[list[float]] = Field(min_length=1)
    cutoff_eps: float
    eps_hat: float
    smoothing_schedule: list[float] = Field(min_length=1)
    initial_step: float
    backtrack_factor: float
    max_iterations: int
    tolerance: float
    boundary_offset: float
    near_band: float
    window_radius: float
    ac_field: str
    capillary_field: str

    @field_validator("radii_list")
    @classmethod
    def _increasing(cls, radii: list[float]) -> list[float]:
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must strictly increase")
        return radii

    @property
    def grid(self) -> GridDomain:
        return make_grid(self.dim, self.half_width, self.nodes_per_axis)

    @property
    def cutoff(self) -> Cutoff:
        return Cutoff(self.cutoff_eps)

    def solve_params(self) -> SolveParams:
        return SolveParams(
            smoothing_schedule=tuple(self.smoothing_schedule),
            initial_step=self.initial_step,
            backtrack_factor=self.backtrack_factor,
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
        )


class FbLabSettings(BaseSettings):
    threads: int = Field(default=1, ge=1)

    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX)


def load_settings() -> FbLabSettings:
    try:
        return FbLabSettings()
    except ValidationError as e:
        raise ConfigError(f"invalid environment: {_describe(e)}") from e


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{where}: {item['msg']}")
    return "; ".join(parts)


def _resolve_field_path(value: str, base: Path) -> str:
    if not value:
        return value
    path = Path(value).expanduser()
    return str(path if path.is_absolute() else base / path)


def load_experiment_config(path: Path) -> ExperimentConfig:
    """Parse and validate an experiment TOML file; field paths resolve against its directory."""
    try:
        with path.open("rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    logger.debug("Loaded config file: %s", path)
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}: {_describe(e)}") from e
    base = path.parent
    return config.model_copy(
        update={
            "ac_field": _resolve_field_path(config.ac_field, base),
            "capillary_field": _resolve_field_path(config.capillary_field, base),
        }
    )


def validate_preconditions(config: ExperimentConfig) -> None:
    """Check every numerical precondition before any solve starts."""
    grid = config.grid
    config.solve_params()
    cutoff = config.cutoff
    for theta in config.theta_list:
        if not 0 < theta <= RIGHT_ANGLE * (1 + 1e-12):
            raise ParameterError(f"theta must lie in (0, pi/2], got {theta}")
    if not math.isfinite(config.eps_hat) or config.eps_hat <= 0:
        raise ParameterError(f"eps_hat must be positive, got {config.eps_hat}")
    if config.near_band <= 0:
        raise ParameterError(f"near_band must be positive, got {config.near_band}")
    if config.window_radius <= 0:
        raise ParameterError(f"window_radius must be positive, got {config.window_radius}")
    if abs(config.boundary_offset) >= config.half_width:
        raise DomainError(f"boundary_offset {config.boundary_offset} puts the free boundary outside the cube")
    smallest = min(config.radii_list) * (1.0 - cutoff.eps)
    if smallest < MIN_QUANTITY_RADIUS_CELLS * grid.spacing * (1 - 1e-12):
        raise ResolutionError(
            f"radius {min(config.radii_list)} shrunk by the cutoff is below "
            f"{MIN_QUANTITY_RADIUS_CELLS} grid cells (h = {grid.spacing})"
        )
    for center in config.centers:
        point = grid.check_point(center)
        for r in config.radii_list:
            if not grid.contains_ball(point, r):
                raise DomainError(f"ball of radius {r} about {center} leaves the grid cube")
