"""Theta-sweep: the convergence gap between rescaled capillary densities and Weiss energies."""

from __future__ import annotations

import math

import click
import numpy as np
import structlog

from ..artifacts import Series, write_csv, write_json, write_svg_line_chart
from ..cli_types import ExperimentArgs
from ..exact import evaluate
from ..exceptions import UndefinedDistanceError
from ..monotone import GraphVarifold, convergence_gap, reg_convergence_gap, unit_ball_volume, weiss
from ..solvers import capillary_width_scale, free_boundary, hausdorff_distance, solve_ac, solve_capillary
from ._fields import (
    bernoulli_spec,
    capillary_spec,
    half_plane_trace,
    open_experiment,
    project_centers,
    provenance,
    usable_radii,
    window,
)
from ._parallel import run_tasks

log = structlog.get_logger("fblab.commands.theta_sweep")

PROVENANCE_COLUMNS = ["h", "nodes_per_axis", "tolerance"]
HEADER = [
    "theta",
    "center_index",
    "center",
    "r",
    "exact_gap",
    "exact_reg_gap",
    "solved_gap",
    "solved_scale",
    "solved_rel_gap",
    "hausdorff",
    "hausdorff_cells",
    "capillary_converged",
    "ac_converged",
    *PROVENANCE_COLUMNS,
]


def fit_exponent(thetas: list[float], gaps: list[float]) -> float | None:
    """Slope of log(gap) against log(theta); None with fewer than two usable points."""
    pairs = [(t, g) for t, g in zip(thetas, gaps) if t > 0 and g is not None and g > 0]
    if len({t for t, _ in pairs}) < 2:
        return None
    x = np.log([t for t, _ in pairs])
    y = np.log([g for _, g in pairs])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def _mean(values: list[float | None]) -> float | None:
    kept = [v for v in values if v is not None]
    return float(np.mean(kept)) if kept else None


def cmd_theta_sweep(args: ExperimentArgs) -> None:
    experiment = open_experiment(args.config, args.out, "theta-sweep")
    config = experiment.config
    grid = experiment.grid
    params = config.solve_params()
    zeta = config.cutoff
    omega = unit_ball_volume(grid.dim)
    extra = provenance(config)
    tail = [extra[k] for k in PROVENANCE_COLUMNS]

    tasks = []
    for theta in config.theta_list:
        slope = capillary_width_scale(theta)
        tasks.append(lambda theta=theta, s=slope: solve_capillary(grid, half_plane_trace(config, s), theta, params))
        tasks.append(lambda theta=theta, s=slope: solve_ac(grid, half_plane_trace(config, s / theta), params))
    results = run_tasks(tasks, workers=experiment.workers, label="Solving")

    rows = []
    exact_means: list[float | None] = []
    solved_means: list[float | None] = []
    for j, theta in enumerate(config.theta_list):
        capillary, ac = results[2 * j], results[2 * j + 1]
        for label, result in (("capillary", capillary), ("ac", ac)):
            if not result.converged:
                experiment.warn("solve_not_converged", solver=label, theta=theta, iterations=result.iterations)

        u_exact = evaluate(capillary_spec(config, theta), grid)
        v_exact = evaluate(bernoulli_spec(config), grid)
        exact_varifold = GraphVarifold(u_exact, theta)
        solved_varifold = GraphVarifold(capillary.field, theta)
        v_solved = ac.field

        exact_centers = project_centers(experiment, u_exact, f"exact theta={theta}")
        capillary_centers = project_centers(experiment, capillary.field, f"capillary theta={theta}")
        ac_centers = project_centers(experiment, v_solved, f"ac theta={theta}")

        distance = None
        if capillary_centers:
            try:
                distance = hausdorff_distance(
                    free_boundary(capillary.field),
                    free_boundary(v_solved),
                    window(grid, capillary_centers[0], config.window_radius),
                )
            except UndefinedDistanceError:
                experiment.warn("hausdorff_undefined", theta=theta)

        exact_gaps: list[float | None] = []
        solved_gaps: list[float | None] = []
        for k, center in enumerate(exact_centers):
            for r in usable_radii(experiment, center):
                exact_gap = convergence_gap(exact_varifold, v_exact, center, r)
                exact_reg_gap = reg_convergence_gap(exact_varifold, v_exact, zeta, center, r)
                solved_gap = scale = rel_gap = None
                if k < len(capillary_centers) and k < len(ac_centers):
                    c_cap, c_ac = capillary_centers[k], ac_centers[k]
                    if grid.contains_ball(c_cap, r) and grid.contains_ball(c_ac, r):
                        solved_gap = convergence_gap(solved_varifold, v_solved, c_cap, r, weiss_center=c_ac)
                        scale = weiss(v_solved, c_ac, r) / (2.0 * omega)
                        rel_gap = solved_gap / scale if scale > 0 else None
                    else:
                        experiment.warn("solved_radius_skipped", theta=theta, center_index=k, radius=r)
                exact_gaps.append(exact_gap)
                solved_gaps.append(solved_gap)
                rows.append(
                    [
                        theta, k, center, r, exact_gap, exact_reg_gap, solved_gap, scale, rel_gap,
                        distance, None if distance is None else distance / grid.spacing,
                        capillary.converged, ac.converged, *tail,
                    ]
                )
        exact_means.append(_mean(exact_gaps))
        solved_means.append(_mean(solved_gaps))
        log.info("theta_done", theta=theta, exact_gap=exact_means[-1], solved_gap=solved_means[-1])

    thetas = list(config.theta_list)
    out = args.out
    write_csv(out / "theta_sweep.csv", HEADER, rows)
    exact_exponent = fit_exponent(thetas, exact_means)
    solved_exponent = fit_exponent(thetas, solved_means)
    write_json(
        out / "theta_sweep_summary.json",
        {
            "experiment": config.experiment,
            "theta": thetas,
            "mean_exact_gap": exact_means,
            "mean_solved_gap": solved_means,
            "exact_exponent": exact_exponent,
            "solved_exponent": solved_exponent,
            "rows": len(rows),
            "warnings": experiment.warnings,
            **extra,
        },
    )
    write_svg_line_chart(
        out / "theta_sweep.svg",
        [
            Series("exact", thetas, [math.nan if g is None else g for g in exact_means]),
            Series("solved", thetas, [math.nan if g is None else g for g in solved_means]),
        ],
        title="convergence gap",
        x_label="theta",
        y_label="gap",
        log_x=True,
        log_y=True,
    )
    exponent = "n/a" if exact_exponent is None else f"{exact_exponent:.3f}"
    click.echo(
        f"theta-sweep: {len(rows)} rows, exact gap exponent {exponent}, "
        f"{experiment.warnings} warnings -> {out}"
    )
