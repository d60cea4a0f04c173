"""Monotonicity-audit: profiles, sandwich checks and the averaging identity on exact and solved fields."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import click
import structlog

from ..artifacts import read_field_csv, write_csv, write_field_csv, write_json
from ..cli_types import ExperimentArgs
from ..exact import evaluate, exact_density, exact_weiss
from ..exceptions import UndefinedDistanceError
from ..grid_field import ScalarField
from ..monotone import (
    AuditReport,
    GraphVarifold,
    MonotoneProfile,
    Quantity,
    audit,
    default_slack,
    density_ratio,
    density_sandwich,
    profile,
    reg_density,
    reg_weiss,
    weiss,
    weiss_average,
    weiss_sandwich,
)
from ..solvers import SolveResult, capillary_width_scale, free_boundary_slope, solve_ac, solve_capillary
from ._fields import (
    Experiment,
    bernoulli_spec,
    capillary_spec,
    curved_trace,
    open_experiment,
    project_centers,
    provenance,
    usable_radii,
)
from ._parallel import run_tasks

log = structlog.get_logger("fblab.commands.monotonicity_audit")

AVERAGING_TOLERANCE = 0.02
PROVENANCE_COLUMNS = ["h", "nodes_per_axis", "tolerance"]


@dataclass
class Subject:
    """One Bernoulli field and one capillary field per angle, audited together."""

    name: str
    ac: ScalarField
    capillary: list[ScalarField]


@dataclass
class AuditedProfile:
    tag: str
    subject: str
    center_index: int
    theta: float | None
    profile: MonotoneProfile
    report: AuditReport


def _solved_subject(experiment: Experiment) -> tuple[Subject, dict]:
    config = experiment.config
    grid = experiment.grid
    params = config.solve_params()
    tasks = []
    if not config.ac_field:
        tasks.append(lambda: solve_ac(grid, curved_trace(config, 1.0), params))
    if not config.capillary_field:
        for theta in config.theta_list:
            scale = capillary_width_scale(theta)
            tasks.append(
                lambda theta=theta, scale=scale: solve_capillary(grid, curved_trace(config, scale), theta, params)
            )
    results: list[SolveResult] = run_tasks(tasks, workers=experiment.workers, label="Solving") if tasks else []
    for result in results:
        if not result.converged:
            experiment.warn("solve_not_converged", iterations=result.iterations)
    queue = iter(results)
    ac = read_field_csv(Path(config.ac_field), grid) if config.ac_field else next(queue).field
    if config.capillary_field:
        loaded = read_field_csv(Path(config.capillary_field), grid)
        capillary = [loaded for _ in config.theta_list]
    else:
        capillary = [next(queue).field for _ in config.theta_list]
    solves = {
        "converged": [bool(r.converged) for r in results],
        "iterations": [int(r.iterations) for r in results],
    }
    return Subject("solved", ac, capillary), solves


def _exact_subject(experiment: Experiment) -> Subject:
    config = experiment.config
    grid = experiment.grid
    return Subject(
        "exact",
        evaluate(bernoulli_spec(config), grid),
        [evaluate(capillary_spec(config, theta), grid) for theta in config.theta_list],
    )


def _audit_profile(
    tag: str,
    subject: str,
    k: int,
    quantity: Quantity,
    fn,
    center,
    radii: list[float],
    slack: float,
    *,
    theta: float | None = None,
    eps_hat: float | None = None,
) -> AuditedProfile:
    prof = profile(quantity, fn, center, radii)
    report = audit(prof, slack, theta=theta, eps_hat=eps_hat)
    return AuditedProfile(tag, subject, k, theta, prof, report)


def _slope_law(experiment: Experiment, subject: Subject) -> dict:
    law: dict = {}
    try:
        law["ac"] = free_boundary_slope(subject.ac)
    except UndefinedDistanceError:
        experiment.warn("slope_undefined", field="ac")
        law["ac"] = None
    ratios = []
    for theta, u in zip(experiment.config.theta_list, subject.capillary):
        try:
            ratios.append(free_boundary_slope(u) / capillary_width_scale(theta))
        except UndefinedDistanceError:
            experiment.warn("slope_undefined", field="capillary", theta=theta)
            ratios.append(None)
    law["capillary_over_tan_theta"] = ratios
    return law


def cmd_monotonicity_audit(args: ExperimentArgs) -> None:
    experiment = open_experiment(args.config, args.out, "monotonicity-audit")
    config = experiment.config
    grid = experiment.grid
    zeta = config.cutoff
    h = grid.spacing
    n = grid.dim
    extra = provenance(config)
    tail = [extra[k] for k in PROVENANCE_COLUMNS]

    solved, solves = _solved_subject(experiment)
    subjects = [_exact_subject(experiment), solved]

    audited: list[AuditedProfile] = []
    sandwich_rows = []
    averaging_rows = []
    for subject in subjects:
        v = subject.ac
        weiss_scale = exact_weiss(n)
        for k, center in enumerate(project_centers(experiment, v, f"{subject.name} ac")):
            radii = usable_radii(experiment, center, shrink=1.0 - zeta.eps)
            if not radii:
                continue
            slack = default_slack(weiss_scale, h, radii[0])
            audited.append(
                _audit_profile("W", subject.name, k, Quantity.WEISS, lambda x, r: weiss(v, x, r), center, radii, slack)
            )
            audited.append(
                _audit_profile(
                    "W_zeta", subject.name, k, Quantity.REG_WEISS,
                    lambda x, r: reg_weiss(v, zeta, x, r), center, radii, slack,
                )
            )
            for r in radii:
                check = weiss_sandwich(v, zeta, center, r)
                sandwich_rows.append(
                    [subject.name, "W", None, k, r, check.lower, check.value, check.upper, check.tolerance, check.holds, *tail]
                )
                regularized = reg_weiss(v, zeta, center, r)
                averaged = weiss_average(v, zeta, center, r)
                error = abs(regularized - averaged) / max(abs(regularized), 1e-300)
                averaging_rows.append(
                    [subject.name, k, r, regularized, averaged, error, error <= AVERAGING_TOLERANCE, *tail]
                )

        for j, (theta, u) in enumerate(zip(config.theta_list, subject.capillary)):
            varifold = GraphVarifold(u, theta)
            complement = varifold.complement()
            scale = exact_density(capillary_spec(config, theta))
            label = f"{subject.name} capillary theta={theta}"
            for k, center in enumerate(project_centers(experiment, u, label)):
                radii = usable_radii(experiment, center, shrink=1.0 - zeta.eps)
                if not radii:
                    continue
                slack = default_slack(scale, h, radii[0])
                audited.append(
                    _audit_profile(
                        f"Theta_t{j}", subject.name, k, Quantity.DENSITY,
                        lambda x, r, V=varifold: density_ratio(V, x, r), center, radii, slack,
                        theta=theta, eps_hat=config.eps_hat,
                    )
                )
                audited.append(
                    _audit_profile(
                        f"Theta-complement_t{j}", subject.name, k, Quantity.DENSITY,
                        lambda x, r, V=complement: density_ratio(V, x, r), center, radii, slack,
                        theta=math.pi - theta, eps_hat=config.eps_hat,
                    )
                )
                audited.append(
                    _audit_profile(
                        f"Theta_zeta_t{j}", subject.name, k, Quantity.REG_DENSITY,
                        lambda x, r, V=varifold: reg_density(V, zeta, x, r), center, radii, slack,
                    )
                )
                for r in radii:
                    check = density_sandwich(varifold, zeta, center, r)
                    sandwich_rows.append(
                        [subject.name, "Theta", theta, k, r, check.lower, check.value, check.upper, check.tolerance, check.holds, *tail]
                    )
        log.info("subject_audited", subject=subject.name, profiles=len(audited))

    out = args.out
    write_field_csv(out / "fields" / "ac.csv", solved.ac)
    for j, u in enumerate(solved.capillary):
        write_field_csv(out / "fields" / f"capillary_t{j}.csv", u)
    for item in audited:
        stem = f"{item.tag}_{item.subject}_c{item.center_index}"
        write_csv(
            out / "profiles" / f"{stem}.csv",
            ["quantity", "theta", "center", "r", "value", *PROVENANCE_COLUMNS],
            [
                [item.profile.quantity.value, item.theta, item.profile.center, r, value, *tail]
                for r, value in zip(item.profile.radii, item.profile.values)
            ],
        )
        write_json(
            out / "audits" / f"{stem}.json",
            {**item.report.model_dump(mode="json"), "theta": item.theta, **extra},
        )
    write_csv(
        out / "sandwich.csv",
        ["subject", "quantity", "theta", "center_index", "r", "lower", "value", "upper", "tolerance", "holds", *PROVENANCE_COLUMNS],
        sandwich_rows,
    )
    write_csv(
        out / "averaging.csv",
        ["subject", "center_index", "r", "W_zeta", "average", "rel_error", "within_tolerance", *PROVENANCE_COLUMNS],
        averaging_rows,
    )
    monotone_failures = [
        f"{a.tag}_{a.subject}_c{a.center_index}" for a in audited if not a.report.verdict
    ]
    hypothesis_failures = [
        f"{a.tag}_{a.subject}_c{a.center_index}" for a in audited if a.report.hypothesis_check is False
    ]
    sandwich_failures = sum(1 for row in sandwich_rows if not row[9])
    averaging_failures = sum(1 for row in averaging_rows if not row[6])
    write_json(
        out / "summary.json",
        {
            "experiment": config.experiment,
            "profiles": len(audited),
            "monotone_failures": monotone_failures,
            "hypothesis_failures": hypothesis_failures,
            "sandwich_rows": len(sandwich_rows),
            "sandwich_failures": sandwich_failures,
            "averaging_failures": averaging_failures,
            "slope_law": _slope_law(experiment, solved),
            "solves": solves,
            "warnings": experiment.warnings,
            **extra,
        },
    )
    click.echo(
        f"monotonicity-audit: {len(audited)} profiles, {len(monotone_failures)} not monotone, "
        f"{sandwich_failures} sandwich failures, {averaging_failures} averaging failures, "
        f"{experiment.warnings} warnings -> {out}"
    )
