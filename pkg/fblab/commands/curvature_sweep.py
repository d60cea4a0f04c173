"""Curvature-sweep: curvature ratio near the wall across angles, and the Bernstein scale check."""

from __future__ import annotations

import math

import click
import structlog

from ..artifacts import Series, write_csv, write_json, write_svg_line_chart
from ..cli_types import ExperimentArgs
from ..constants import BERNSTEIN_SCALES, FLAT_CURVATURE_TOLERANCE
from ..exact import curvature_ratio, evaluate
from ..exceptions import UndefinedDistanceError, UndefinedRatioError
from ..grid_field import make_grid
from ..solvers import capillary_width_scale, free_boundary_slope, nearest_free_boundary_point, solve_capillary
from ._fields import capillary_spec, half_plane_trace, open_experiment, provenance, window
from ._parallel import run_tasks

log = structlog.get_logger("fblab.commands.curvature_sweep")

PROVENANCE_COLUMNS = ["h", "nodes_per_axis", "tolerance"]
# max/min of the solved ratio across angles counted as uniformly bounded
BOUNDED_SPREAD = 3.0


def cmd_curvature_sweep(args: ExperimentArgs) -> None:
    experiment = open_experiment(args.config, args.out, "curvature-sweep")
    config = experiment.config
    grid = experiment.grid
    params = config.solve_params()
    extra = provenance(config)
    tail = [extra[k] for k in PROVENANCE_COLUMNS]
    anchor = config.centers[0]

    tasks = [
        lambda theta=theta: solve_capillary(
            grid, half_plane_trace(config, capillary_width_scale(theta)), theta, params
        )
        for theta in config.theta_list
    ]
    results = run_tasks(tasks, workers=experiment.workers, label="Solving")

    rows = []
    for theta, result in zip(config.theta_list, results):
        if not result.converged:
            experiment.warn("solve_not_converged", theta=theta, iterations=result.iterations)
        u = result.field
        exact = evaluate(capillary_spec(config, theta), grid)
        exact_ratio = curvature_ratio(
            exact,
            theta,
            config.near_band,
            window(grid, nearest_free_boundary_point(exact, anchor), config.window_radius),
        )
        solved_ratio = slope = None
        try:
            center = nearest_free_boundary_point(u, anchor)
            solved_ratio = curvature_ratio(u, theta, config.near_band, window(grid, center, config.window_radius))
            slope = free_boundary_slope(u)
        except (UndefinedDistanceError, UndefinedRatioError) as e:
            experiment.warn("curvature_undefined", theta=theta, reason=str(e))
        rows.append(
            [theta, solved_ratio, exact_ratio, slope, capillary_width_scale(theta), result.converged, *tail]
        )
        log.info("curvature_done", theta=theta, ratio=solved_ratio)

    bernstein_rows = []
    for scale in BERNSTEIN_SCALES:
        scaled_grid = make_grid(config.dim, config.half_width * scale, config.nodes_per_axis)
        for theta in config.theta_list:
            u = evaluate(capillary_spec(config, theta), scaled_grid)
            center = nearest_free_boundary_point(u, [c * scale for c in anchor])
            ratio = curvature_ratio(
                u, theta, config.near_band * scale, window(scaled_grid, center, config.window_radius * scale)
            )
            bernstein_rows.append(
                [
                    theta,
                    scaled_grid.half_width,
                    scaled_grid.spacing,
                    ratio,
                    ratio <= FLAT_CURVATURE_TOLERANCE,
                    FLAT_CURVATURE_TOLERANCE,
                    config.nodes_per_axis,
                ]
            )

    ratios = [row[1] for row in rows if row[1] is not None]
    spread = max(ratios) / min(ratios) if ratios and min(ratios) > 0 else None
    out = args.out
    write_csv(
        out / "curvature_sweep.csv",
        ["theta", "curvature_ratio", "exact_ratio", "free_boundary_slope", "tan_theta", "converged", *PROVENANCE_COLUMNS],
        rows,
    )
    write_csv(
        out / "bernstein.csv",
        ["theta", "half_width", "h", "curvature_ratio", "flat", "flat_tolerance", "nodes_per_axis"],
        bernstein_rows,
    )
    write_json(
        out / "curvature_sweep_summary.json",
        {
            "experiment": config.experiment,
            "theta": list(config.theta_list),
            "curvature_ratio": [row[1] for row in rows],
            "spread": spread,
            "spread_bound": BOUNDED_SPREAD,
            "bounded": None if spread is None else spread <= BOUNDED_SPREAD,
            "exact_flat": all(row[2] <= FLAT_CURVATURE_TOLERANCE for row in rows),
            "bernstein_flat": all(row[4] for row in bernstein_rows),
            "warnings": experiment.warnings,
            **extra,
        },
    )
    write_svg_line_chart(
        out / "curvature_sweep.svg",
        [Series("solved", list(config.theta_list), [math.nan if r[1] is None else r[1] for r in rows])],
        title="curvature ratio |A| / sin(theta)",
        x_label="theta",
        y_label="ratio",
    )
    bounded = "n/a" if spread is None else f"{spread:.3g} ({'bounded' if spread <= BOUNDED_SPREAD else 'spread'})"
    click.echo(
        f"curvature-sweep: {len(rows)} angles, max/min ratio {bounded}, "
        f"{experiment.warnings} warnings -> {out}"
    )
