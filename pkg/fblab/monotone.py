"""Density ratios, Weiss energies, their cutoff-regularized versions and audits.

Centers always lie in the base plane. The varifold mass is the signed evaluation
||V||(B) = |M cap B| - cos(theta) |wet cap B|, written in graph coordinates.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.integrate import trapezoid

from .constants import (
    AVERAGING_SAMPLES,
    CUTOFF_SUBSAMPLES,
    DEFAULT_CUTOFF_EPS,
    MIN_QUANTITY_RADIUS_CELLS,
    NEGATIVITY_TOLERANCE,
    RAY_SAMPLES,
    RELATIVE_SLACK,
    SLACK_CELLS,
    UNIT_BALL_VOLUMES,
)
from .exceptions import ConstraintViolationError, ParameterError
from .functionals import smooth_step, smooth_step_derivative
from .grid_field import (
    Ball,
    GridDomain,
    Positivity,
    ScalarField,
    cell_average,
    check_ball,
    full_mask,
    gradient,
    integrate_values,
    positivity_gradient,
    region_mask,
    sphere_integral,
    straddling,
)

Point = Sequence[float] | np.ndarray


def unit_ball_volume(n: int) -> float:
    try:
        return UNIT_BALL_VOLUMES[n]
    except KeyError:
        raise ParameterError(f"unit ball volume is tabulated for n in {sorted(UNIT_BALL_VOLUMES)}, got {n}")


def negative_part(value: float) -> float:
    return -min(0.0, value)


@dataclass(frozen=True)
class Cutoff:
    """Decreasing profile: 1 on (-inf, 1 - eps], 0 on [1, inf), quintic in between."""

    eps: float = DEFAULT_CUTOFF_EPS

    def __post_init__(self):
        if not 0 < self.eps < 0.5:
            raise ParameterError(f"cutoff eps must lie in (0, 1/2), got {self.eps}")

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        return 1.0 - smooth_step(np.asarray(t, dtype=float) - (1.0 - self.eps), self.eps)

    def derivative(self, t: np.ndarray | float) -> np.ndarray:
        return -smooth_step_derivative(np.asarray(t, dtype=float) - (1.0 - self.eps), self.eps)


@dataclass(frozen=True, eq=False)
class GraphVarifold:
    """V = [graph of u over {u > 0}] - cos(theta) [wet region], in graph coordinates.

    A complement varifold describes the other side of the same interface: angle
    pi - theta, with the dry region of u as its wetted part. Its mass is taken
    relative to the flat wall, i.e. the stationary piece (cos theta)_- [wall] is
    removed, which leaves the curvature-estimate hypothesis invariant.
    """

    u: ScalarField
    theta: float
    is_complement: bool = False

    def __post_init__(self):
        if not 0 < self.theta < math.pi:
            raise ParameterError(f"contact angle must lie in (0, pi), got {self.theta}")
        if np.any(self.u.values < NEGATIVITY_TOLERANCE):
            raise ConstraintViolationError("graph height must be nonnegative")

    @cached_property
    def lipschitz(self) -> float:
        return float(np.max(gradient(self.u).norm(), initial=0.0))

    def complement(self) -> GraphVarifold:
        return GraphVarifold(self.u, math.pi - self.theta, not self.is_complement)


def _check_quantity_ball(field: ScalarField, x: Point, r: float) -> np.ndarray:
    center = field.domain.check_point(x)
    check_ball(field.domain, center, r, MIN_QUANTITY_RADIUS_CELLS)
    return center


def _interval_where_positive(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sub-interval of [0, 1] where the linear function from a to b is positive."""
    with np.errstate(divide="ignore", invalid="ignore"):
        root = a / (a - b)
    lo = np.where(a > 0, 0.0, np.where(b > 0, root, 1.0))
    hi = np.where(b > 0, 1.0, np.where(a > 0, root, 0.0))
    return lo, hi


def _ray_directions(n: int, r: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    if n == 1:
        return np.array([[-1.0], [1.0]]), np.ones(2)
    count = math.ceil(2.0 * math.pi * r / h - 1e-9)
    angles = 2.0 * math.pi * np.arange(count) / count
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return directions, np.full(count, 2.0 * math.pi / count)


def _crescent_integral(u: ScalarField, area: ScalarField, x: np.ndarray, r: float) -> float:
    """Integral of the area element over {u > 0, |y - x| < r <= sqrt(|y - x|^2 + u^2)}.

    Evaluated along rays from x; on each radial segment the covered fraction is
    found by linear interpolation of u and of |y - x|^2 + u^2 - r^2.
    """
    grid = u.domain
    distance = np.linalg.norm(grid.points - x, axis=-1)
    height = float(np.max(u.values[distance <= r + grid.spacing], initial=0.0))
    if height <= 0.0:
        return 0.0
    rho = np.linspace(math.sqrt(max(r * r - height * height, 0.0)), r, RAY_SAMPLES)
    step = rho[1] - rho[0]
    if step <= 0.0:
        return 0.0
    directions, weights = _ray_directions(grid.dim, r, grid.spacing)
    points = x + rho[None, :, None] * directions[:, None, :]
    ray_height = u.at(points)
    lifted = rho[None, :] ** 2 + ray_height**2 - r * r
    density = area.at(points) * rho[None, :] ** (grid.dim - 1)
    lo_pos, hi_pos = _interval_where_positive(ray_height[:, :-1], ray_height[:, 1:])
    lo_out, hi_out = _interval_where_positive(lifted[:, :-1], lifted[:, 1:])
    fraction = np.clip(np.minimum(hi_pos, hi_out) - np.maximum(lo_pos, lo_out), 0.0, 1.0)
    segments = 0.5 * (density[:, :-1] + density[:, 1:]) * fraction * step
    return float(np.sum(segments, axis=1) @ weights)


def density_ratio(V: GraphVarifold, x: Point, r: float) -> float:
    """Theta_V(x, r) = ||V||(B_r(x)) / (omega_n r^n).

    The interface term over {u > 0, lifted distance < r} is split into the
    integral over {u > 0, |y - x| < r} minus a thin crescent, so the disk part
    shares its mask with the wet-region term.
    """
    u = V.u
    grid = u.domain
    center = _check_quantity_ball(u, x, r)
    n = grid.dim
    area = ScalarField(grid, np.sqrt(1.0 + positivity_gradient(u).squared_norm()))
    disk = region_mask(grid, Positivity(u), Ball(tuple(center), r))
    cos_theta = math.cos(V.theta)
    if V.is_complement:
        ball_measure = region_mask(grid, Ball(tuple(center), r)).measure()
        wet = ball_measure - disk.measure()
        flat = integrate_values(area.values, disk) - cos_theta * wet
        flat -= negative_part(cos_theta) * ball_measure
    else:
        flat = integrate_values(area.values - cos_theta, disk)
    crescent = _crescent_integral(u, area, center, r)
    return (flat - crescent) / (unit_ball_volume(n) * r**n)


def weiss(v: ScalarField, x: Point, r: float) -> float:
    """W_v(x, r) = r^-n int_{v>0, B_r} (|Dv|^2 + 1) - r^(-n-1) int_{dB_r} v^2."""
    grid = v.domain
    center = _check_quantity_ball(v, x, r)
    n = grid.dim
    mask = region_mask(grid, Positivity(v), Ball(tuple(center), r))
    volume = integrate_values(positivity_gradient(v).squared_norm() + 1.0, mask)
    boundary = sphere_integral(v, center, r, power=2)
    return volume / r**n - boundary / r ** (n + 1)


def _cutoff_weights(
    grid: GridDomain, profile: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """Cell averages of a cutoff profile; only cells near its transition band are sub-sampled.

    The band is about eps * r wide, often a single cell, so nodal values alone miss
    most of its mass.
    """
    band = straddling(profile(grid.points))
    return cell_average(grid, profile, band, CUTOFF_SUBSAMPLES)


def reg_density(V: GraphVarifold, zeta: Cutoff, x: Point, r: float) -> float:
    """Theta^zeta: the density ratio with the ball indicator replaced by zeta(. / r)."""
    u = V.u
    grid = u.domain
    center = _check_quantity_ball(u, x, r)
    n = grid.dim
    area = np.sqrt(1.0 + positivity_gradient(u).squared_norm())
    positive = region_mask(grid, Positivity(u))

    def flat_profile(points: np.ndarray) -> np.ndarray:
        return zeta(np.linalg.norm(points - center, axis=-1) / r)

    def lifted_profile(points: np.ndarray) -> np.ndarray:
        squared = np.sum((points - center) ** 2, axis=-1) + u.at(points) ** 2
        return zeta(np.sqrt(squared) / r)

    flat_weight = _cutoff_weights(grid, flat_profile)
    lifted_weight = _cutoff_weights(grid, lifted_profile)
    cos_theta = math.cos(V.theta)
    if V.is_complement:
        total = integrate_values(flat_weight, full_mask(grid))
        wet = total - integrate_values(flat_weight, positive)
        mass = integrate_values(lifted_weight * area, positive) - cos_theta * wet
        mass -= negative_part(cos_theta) * total
    else:
        mass = integrate_values(lifted_weight * area - cos_theta * flat_weight, positive)
    return mass / (unit_ball_volume(n) * r**n)


def reg_weiss(v: ScalarField, zeta: Cutoff, x: Point, r: float) -> float:
    """W^zeta = r^-n int zeta (|Dv|^2 + 1) + r^(-n-1) int zeta' v^2 / |y - x| over {v > 0}.

    The second integrand vanishes wherever v does, so it is integrated over the cube.
    """
    grid = v.domain
    center = _check_quantity_ball(v, x, r)
    n = grid.dim
    positive = region_mask(grid, Positivity(v))
    energy = positivity_gradient(v).squared_norm() + 1.0

    def profile(points: np.ndarray) -> np.ndarray:
        return zeta(np.linalg.norm(points - center, axis=-1) / r)

    def boundary_density(points: np.ndarray) -> np.ndarray:
        distance = np.linalg.norm(points - center, axis=-1)
        slope = zeta.derivative(distance / r)
        safe = np.where(distance > 0.0, distance, 1.0)
        return np.where(slope != 0.0, slope * v.at(points) ** 2 / safe, 0.0)

    band = straddling(profile(grid.points))
    first = integrate_values(cell_average(grid, profile, band, CUTOFF_SUBSAMPLES) * energy, positive)
    boundary = cell_average(grid, boundary_density, band, CUTOFF_SUBSAMPLES)
    second = integrate_values(boundary, full_mask(grid))
    return first / r**n + second / r ** (n + 1)


def weiss_average(
    v: ScalarField, zeta: Cutoff, x: Point, r: float, samples: int = AVERAGING_SAMPLES
) -> float:
    """r^(-n-1) int (-zeta'(s / r)) s^n W_v(x, s) ds, sampled on [(1 - eps) r, r]."""
    n = v.domain.dim
    radii = np.linspace((1.0 - zeta.eps) * r, r, samples)
    values = np.array([-float(zeta.derivative(s / r)) * s**n * weiss(v, x, s) for s in radii])
    return float(trapezoid(values, radii)) / r ** (n + 1)


def convergence_gap(
    V: GraphVarifold,
    v: ScalarField,
    x: Point,
    r: float,
    *,
    weiss_center: Point | None = None,
) -> float:
    """|theta^-2 Theta_V(x, r) - W_v(x, r) / (2 omega_n)|."""
    n = v.domain.dim
    density = density_ratio(V, x, r) / V.theta**2
    energy = weiss(v, x if weiss_center is None else weiss_center, r)
    return abs(density - energy / (2.0 * unit_ball_volume(n)))


def reg_convergence_gap(
    V: GraphVarifold,
    v: ScalarField,
    zeta: Cutoff,
    x: Point,
    r: float,
    *,
    weiss_center: Point | None = None,
) -> float:
    n = v.domain.dim
    density = reg_density(V, zeta, x, r) / V.theta**2
    energy = reg_weiss(v, zeta, x if weiss_center is None else weiss_center, r)
    return abs(density - energy / (2.0 * unit_ball_volume(n)))


def convergence_bracket(v: ScalarField, x: Point, r: float, eps: float) -> tuple[float, float]:
    """Bounds for lim theta^-2 Theta_V(x, r) from Weiss energies at the neighbouring radii."""
    n = v.domain.dim
    scale = 2.0 * unit_ball_volume(n)
    lower = (1.0 - eps) ** n * weiss(v, x, (1.0 - eps) * r) / scale
    upper = (1.0 - eps) ** (-n) * weiss(v, x, r / (1.0 - eps)) / scale
    return lower, upper


def regularity_radius(v: ScalarField, x: Point, radii: Sequence[float], eps: float) -> float | None:
    """Largest sampled radius with W_v(x, r) <= (1 + eps / 2) omega_n / 2."""
    threshold = (1.0 + eps / 2.0) * unit_ball_volume(v.domain.dim) / 2.0
    regular = [r for r in radii if weiss(v, x, r) <= threshold]
    return max(regular, default=None)


def hypothesis_holds(density: float, theta: float, eps_hat: float) -> bool:
    """Theta + (cos theta)_- <= (1 + eps_hat) (1 - cos theta) / 2."""
    cos_theta = math.cos(theta)
    return density + negative_part(cos_theta) <= (1.0 + eps_hat) * (1.0 - cos_theta) / 2.0


def default_slack(scale: float, spacing: float, r: float) -> float:
    """Monotonicity slack relative to the quantity's scale: 2% plus the O(h / r) quadrature error."""
    return abs(scale) * (RELATIVE_SLACK + SLACK_CELLS * spacing / r)


# --- profiles and audits -----------------------------------------------------


class Quantity(StrEnum):
    DENSITY = "Theta"
    WEISS = "W"
    REG_DENSITY = "Theta_zeta"
    REG_WEISS = "W_zeta"


class MonotoneProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    quantity: Quantity
    center: list[float]
    radii: list[float]
    values: list[float]

    @model_validator(mode="after")
    def _check_radii(self) -> MonotoneProfile:
        if not self.radii:
            raise ValueError("profile needs at least one radius")
        if len(self.values) != len(self.radii):
            raise ValueError("profile needs one value per radius")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("profile radii must strictly increase")
        return self


class SandwichCheck(BaseModel):
    lower: float
    value: float
    upper: float
    tolerance: float
    holds: bool


class AuditReport(BaseModel):
    quantity: Quantity
    center: list[float]
    radii: list[float]
    values: list[float]
    verdict: bool
    max_violation: float
    slack: float
    hypothesis_check: bool | None = None


def profile(
    quantity: Quantity | str,
    evaluate: Callable[[np.ndarray, float], float],
    center: Point,
    radii: Sequence[float],
) -> MonotoneProfile:
    """Sample r -> evaluate(center, r) over increasing radii."""
    radii = [float(r) for r in radii]
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ParameterError(f"profile radii must be nonempty and strictly increasing: {radii}")
    point = np.asarray(center, dtype=float)
    values = [float(evaluate(point, r)) for r in radii]
    return MonotoneProfile(
        quantity=Quantity(quantity),
        center=[float(c) for c in point],
        radii=radii,
        values=values,
    )


def audit(
    prof: MonotoneProfile,
    slack: float,
    *,
    theta: float | None = None,
    eps_hat: float | None = None,
) -> AuditReport:
    """Monotone-up-to-slack verdict, largest drop between consecutive radii, and
    for density profiles the curvature-estimate hypothesis when theta and eps_hat are given.
    """
    drops = [max(0.0, a - b) for a, b in zip(prof.values, prof.values[1:])]
    worst = max(drops, default=0.0)
    hypothesis = None
    if prof.quantity is Quantity.DENSITY and theta is not None and eps_hat is not None:
        hypothesis = all(hypothesis_holds(value, theta, eps_hat) for value in prof.values)
    return AuditReport(
        quantity=prof.quantity,
        center=prof.center,
        radii=prof.radii,
        values=prof.values,
        verdict=worst <= slack,
        max_violation=worst,
        slack=slack,
        hypothesis_check=hypothesis,
    )


def sandwich(lower: float, value: float, upper: float, tolerance: float) -> SandwichCheck:
    holds = lower - tolerance <= value <= upper + tolerance
    return SandwichCheck(lower=lower, value=value, upper=upper, tolerance=tolerance, holds=holds)


def density_sandwich(V: GraphVarifold, zeta: Cutoff, x: Point, r: float) -> SandwichCheck:
    """(1 - eps)^n Theta(x, (1 - eps) r) <= Theta^zeta(x, r) <= Theta(x, r), within 2%."""
    n = V.u.domain.dim
    upper = density_ratio(V, x, r)
    lower = (1.0 - zeta.eps) ** n * density_ratio(V, x, (1.0 - zeta.eps) * r)
    return sandwich(lower, reg_density(V, zeta, x, r), upper, RELATIVE_SLACK * abs(upper))


def weiss_sandwich(v: ScalarField, zeta: Cutoff, x: Point, r: float) -> SandwichCheck:
    """(1 - eps)^n W(x, (1 - eps) r) <= W^zeta(x, r) <= W(x, r), within 2%."""
    n = v.domain.dim
    upper = weiss(v, x, r)
    lower = (1.0 - zeta.eps) ** n * weiss(v, x, (1.0 - zeta.eps) * r)
    return sandwich(lower, reg_weiss(v, zeta, x, r), upper, RELATIVE_SLACK * abs(upper))
