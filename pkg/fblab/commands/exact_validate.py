"""Exact-validate: density, Weiss and curvature of half-plane models against their analytic values."""

from __future__ import annotations

import click
import structlog

from ..artifacts import write_csv, write_json
from ..cli_types import ExperimentArgs
from ..constants import FLAT_CURVATURE_TOLERANCE
from ..exact import curvature_ratio, evaluate, exact_density, exact_weiss
from ..monotone import GraphVarifold, density_ratio, weiss
from ._fields import (
    bernoulli_spec,
    capillary_spec,
    open_experiment,
    project_centers,
    provenance,
    usable_radii,
    window,
)

log = structlog.get_logger("fblab.commands.exact_validate")

DENSITY_TOLERANCE = 0.01
WEISS_TOLERANCE = 0.015

PROVENANCE_COLUMNS = ["h", "nodes_per_axis", "tolerance"]


def cmd_exact_validate(args: ExperimentArgs) -> None:
    experiment = open_experiment(args.config, args.out, "exact-validate")
    config = experiment.config
    grid = experiment.grid
    extra = provenance(config)
    tail = [extra[k] for k in PROVENANCE_COLUMNS]

    density_rows = []
    curvature_rows = []
    for theta in config.theta_list:
        spec = capillary_spec(config, theta)
        u = evaluate(spec, grid)
        varifold = GraphVarifold(u, theta)
        target = exact_density(spec)
        centers = project_centers(experiment, u, f"capillary theta={theta}")
        for k, center in enumerate(centers):
            for r in usable_radii(experiment, center):
                value = density_ratio(varifold, center, r)
                error = abs(value - target) / target
                density_rows.append(
                    [theta, k, center, r, value, target, error, error <= DENSITY_TOLERANCE, *tail]
                )
        if centers:
            ratio = curvature_ratio(u, theta, config.near_band, window(grid, centers[0], config.window_radius))
            curvature_rows.append([theta, ratio, ratio <= FLAT_CURVATURE_TOLERANCE, *tail])
        log.info("exact_theta_done", theta=theta)

    weiss_rows = []
    v = evaluate(bernoulli_spec(config), grid)
    target = exact_weiss(grid.dim)
    for k, center in enumerate(project_centers(experiment, v, "bernoulli")):
        for r in usable_radii(experiment, center):
            value = weiss(v, center, r)
            error = abs(value - target) / target
            weiss_rows.append([k, center, r, value, target, error, error <= WEISS_TOLERANCE, *tail])

    out = args.out
    write_csv(
        out / "exact_density.csv",
        ["theta", "center_index", "center", "r", "Theta", "target", "rel_error", "within_tolerance", *PROVENANCE_COLUMNS],
        density_rows,
    )
    write_csv(
        out / "exact_weiss.csv",
        ["center_index", "center", "r", "W", "target", "rel_error", "within_tolerance", *PROVENANCE_COLUMNS],
        weiss_rows,
    )
    write_csv(
        out / "exact_curvature.csv",
        ["theta", "curvature_ratio", "flat", *PROVENANCE_COLUMNS],
        curvature_rows,
    )
    density_failures = sum(1 for row in density_rows if not row[7])
    weiss_failures = sum(1 for row in weiss_rows if not row[6])
    curvature_failures = sum(1 for row in curvature_rows if not row[2])
    write_json(
        out / "summary.json",
        {
            "experiment": config.experiment,
            "density_rows": len(density_rows),
            "density_failures": density_failures,
            "max_density_error": max((row[6] for row in density_rows), default=None),
            "weiss_rows": len(weiss_rows),
            "weiss_failures": weiss_failures,
            "max_weiss_error": max((row[5] for row in weiss_rows), default=None),
            "curvature_failures": curvature_failures,
            "warnings": experiment.warnings,
            **extra,
        },
    )
    failures = density_failures + weiss_failures + curvature_failures
    click.echo(
        f"exact-validate: {len(density_rows)} density rows, {len(weiss_rows)} Weiss rows, "
        f"{failures} outside tolerance, {experiment.warnings} warnings -> {out}"
    )
