"""Alt-Caffarelli and capillary graph energies, sharp and smoothed."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import MAX_SMOOTHING_FRACTION, NEGATIVITY_TOLERANCE, SLOPE_BOUND_FACTOR
from .exceptions import ConstraintViolationError, GridMismatchError, ParameterError, SlopeBoundError
from .grid_field import (
    RegionMask,
    ScalarField,
    gradient,
    integrate_values,
    squared_edge_gradient,
    squared_edge_gradient_adjoint,
)


def smooth_step(t: np.ndarray | float, width: float) -> np.ndarray:
    """Quintic step: 0 below 0, 1 above width, C^2 at both ends."""
    s = np.clip(np.asarray(t, dtype=float) / width, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def smooth_step_derivative(t: np.ndarray | float, width: float) -> np.ndarray:
    s = np.clip(np.asarray(t, dtype=float) / width, 0.0, 1.0)
    return 30.0 * s**2 * (1.0 - s) ** 2 / width


@dataclass(frozen=True)
class SmoothingParams:
    """Width of the smoothed positivity indicator."""

    indicator_width: float

    def __post_init__(self):
        if not math.isfinite(self.indicator_width) or self.indicator_width <= 0:
            raise ParameterError(
                f"indicator_width must be positive, got {self.indicator_width}"
            )

    def check(self, half_width: float) -> None:
        if self.indicator_width > MAX_SMOOTHING_FRACTION * half_width * (1 + 1e-12):
            raise ParameterError(
                f"indicator_width {self.indicator_width} exceeds "
                f"{MAX_SMOOTHING_FRACTION} * half_width ({half_width})"
            )


def _check_region(field: ScalarField, region: RegionMask) -> None:
    if field.domain != region.domain:
        raise GridMismatchError(f"grid mismatch: {field.domain} vs {region.domain}")


def _check_nonnegative(u: ScalarField, region: RegionMask) -> None:
    support = region.weights > 0
    if np.any(u.values[support] < NEGATIVITY_TOLERANCE):
        worst = float(np.min(u.values[support]))
        raise ConstraintViolationError(f"height field is negative on the region (min {worst})")


def ac_energy(v: ScalarField, region: RegionMask) -> float:
    """J(v) = integral of |Dv|^2 + [v > 0] over the region, sharp indicator at nodes."""
    _check_region(v, region)
    integrand = gradient(v).squared_norm() + (v.values > 0.0)
    return integrate_values(integrand, region)


def capillary_energy(u: ScalarField, theta: float, region: RegionMask) -> float:
    """Integral of sqrt(1 + |Du|^2) - cos(theta) over the region where u > 0."""
    _check_region(u, region)
    _check_nonnegative(u, region)
    area = np.sqrt(1.0 + gradient(u).squared_norm())
    integrand = (area - math.cos(theta)) * (u.values > 0.0)
    return integrate_values(integrand, region)


def _descent_direction(derivative: np.ndarray, field: ScalarField) -> ScalarField:
    """Turn dE/du into the discrete L2 gradient, Dirichlet nodes zeroed."""
    h = field.domain.spacing
    direction = derivative / h**field.domain.dim
    direction[field.domain.boundary_nodes] = 0.0
    return ScalarField(field.domain, direction)


def ac_energy_smoothed(
    v: ScalarField, params: SmoothingParams, region: RegionMask
) -> tuple[float, ScalarField]:
    """Surrogate of J with the indicator replaced by the quintic step.

    Returns the energy and its discrete L2 gradient, which at interior nodes of
    a full-weight region reads -2 Lap_h v + Phi'(v).
    """
    _check_region(v, region)
    params.check(v.domain.half_width)
    h = v.domain.spacing
    delta = params.indicator_width
    weights = region.weights
    dirichlet = squared_edge_gradient(v.values, h)
    energy = integrate_values(dirichlet + smooth_step(v.values, delta), region)
    derivative = squared_edge_gradient_adjoint(v.values, weights, h)
    derivative += weights * smooth_step_derivative(v.values, delta)
    derivative *= h**v.domain.dim
    return energy, _descent_direction(derivative, v)


def capillary_energy_smoothed(
    u: ScalarField, theta: float, params: SmoothingParams, region: RegionMask
) -> tuple[float, ScalarField]:
    """Surrogate of the capillary graph energy.

    The integrand is (sqrt(1 + S) - 1) + (1 - cos(theta)) * Phi(u): excess area on
    every node, wetted area through the step. Where Phi = 1 this is the sharp
    integrand sqrt(1 + S) - cos(theta). A dry node only carries the excess area of
    edges leaving the wet set, so the last wet edge is charged in full.
    """
    _check_region(u, region)
    params.check(u.domain.half_width)
    h = u.domain.spacing
    delta = params.indicator_width
    weights = region.weights
    wetting = 1.0 - math.cos(theta)
    area = np.sqrt(1.0 + squared_edge_gradient(u.values, h))
    energy = integrate_values(area - 1.0 + wetting * smooth_step(u.values, delta), region)
    derivative = squared_edge_gradient_adjoint(u.values, weights / (2.0 * area), h)
    derivative += weights * wetting * smooth_step_derivative(u.values, delta)
    derivative *= h**u.domain.dim
    return energy, _descent_direction(derivative, u)


def check_slope_bound(u: ScalarField, theta: float, region: RegionMask) -> float:
    slopes = gradient(u).norm()[region.weights > 0]
    lip = float(np.max(slopes, initial=0.0))
    if lip > SLOPE_BOUND_FACTOR * theta:
        raise SlopeBoundError(
            f"max |Du| = {lip:.6g} exceeds {SLOPE_BOUND_FACTOR} * theta = {SLOPE_BOUND_FACTOR * theta:.6g}"
        )
    return lip


def expansion_gap(u: ScalarField, theta: float, region: RegionMask) -> float:
    """Normalized remainder of the small-angle expansion of the capillary energy.

    |A(u) - (theta^2 / 2) * integral of (|Du|^2 / theta^2 + 1) over {u > 0}| / theta^3,
    with both integrals sharing one gradient and one mask.
    """
    _check_region(u, region)
    check_slope_bound(u, theta, region)
    squared = gradient(u).squared_norm()
    positive = u.values > 0.0
    remainder = (np.sqrt(1.0 + squared) - math.cos(theta)) - 0.5 * (squared + theta**2)
    return abs(integrate_values(remainder * positive, region)) / theta**3
