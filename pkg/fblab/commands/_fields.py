"""Shared experiment plumbing: config loading, boundary data, centers and radii."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from ..config import ExperimentConfig, load_experiment_config, load_settings, validate_preconditions
from ..constants import MIN_QUANTITY_RADIUS_CELLS
from ..exact import HalfPlaneKind, HalfPlaneSpec, evaluate
from ..exceptions import ConfigError, UndefinedDistanceError
from ..grid_field import Ball, GridDomain, RegionMask, ScalarField, region_mask
from ..solvers import nearest_free_boundary_point

log = structlog.get_logger("fblab.commands")

# Curvature of the non-conical boundary trace used for monotonicity audits
TRACE_CURVATURE = 0.2


@dataclass
class Experiment:
    """A loaded, validated experiment with its running warning count."""

    config: ExperimentConfig
    out: Path
    workers: int
    warnings: int = 0

    @property
    def grid(self) -> GridDomain:
        return self.config.grid

    def warn(self, event: str, **details) -> None:
        self.warnings += 1
        log.warning(event, **details)


def open_experiment(config_path: Path, out: Path, name: str) -> Experiment:
    config = load_experiment_config(config_path)
    if config.experiment != name:
        raise ConfigError(f"config {config_path} is for {config.experiment}, not {name}")
    validate_preconditions(config)
    settings = load_settings()
    return Experiment(config=config, out=out, workers=settings.threads)


def capillary_spec(config: ExperimentConfig, theta: float) -> HalfPlaneSpec:
    return HalfPlaneSpec(
        HalfPlaneKind.CAPILLARY, _first_axis(config.dim), theta=theta, offset=config.boundary_offset
    )


def bernoulli_spec(config: ExperimentConfig) -> HalfPlaneSpec:
    return HalfPlaneSpec(HalfPlaneKind.BERNOULLI, _first_axis(config.dim), offset=config.boundary_offset)


def _first_axis(dim: int) -> tuple[float, ...]:
    return tuple(1.0 if k == 0 else 0.0 for k in range(dim))


def half_plane_trace(config: ExperimentConfig, scale: float) -> ScalarField:
    """scale * (offset - y_1)_+; the solvers read it on the cube boundary only."""
    return evaluate(bernoulli_spec(config), config.grid).scaled(scale)


def curved_trace(config: ExperimentConfig, scale: float) -> ScalarField:
    """scale * (offset - y_1 + c |y'|^2)_+, boundary data whose minimizer is not a cone."""
    grid = config.grid
    points = grid.points
    bend = TRACE_CURVATURE * np.sum(points[..., 1:] ** 2, axis=-1)
    return ScalarField(grid, scale * np.maximum(config.boundary_offset - points[..., 0] + bend, 0.0))


def project_centers(experiment: Experiment, f: ScalarField, label: str) -> list[np.ndarray]:
    """Move each configured center to the nearest point of the free boundary of f."""
    projected = []
    for k, center in enumerate(experiment.config.centers):
        try:
            projected.append(nearest_free_boundary_point(f, center))
        except UndefinedDistanceError:
            experiment.warn("no_free_boundary", field=label, center_index=k)
            return []
    return projected


def usable_radii(experiment: Experiment, center: np.ndarray, *, shrink: float = 1.0) -> list[float]:
    """Configured radii whose ball stays in the cube after projection; skips are warnings."""
    grid = experiment.grid
    kept = []
    for r in experiment.config.radii_list:
        if grid.contains_ball(center, r) and r * shrink >= MIN_QUANTITY_RADIUS_CELLS * grid.spacing * (1 - 1e-12):
            kept.append(r)
        else:
            experiment.warn("radius_skipped", center=[float(c) for c in center], radius=r)
    return kept


def window(grid: GridDomain, center: np.ndarray, radius: float) -> RegionMask:
    return region_mask(grid, Ball(tuple(float(c) for c in center), radius))


def provenance(config: ExperimentConfig) -> dict:
    """Grid resolution and tolerance carried on every output row."""
    return {
        "h": config.grid.spacing,
        "nodes_per_axis": config.nodes_per_axis,
        "tolerance": config.tolerance,
    }
