"""Half-plane model solutions and the second fundamental form of graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from .constants import FREE_BOUNDARY_MARGIN_CELLS, RIGHT_ANGLE, VERTICAL_GRAPH_SLOPE
from .exceptions import ParameterError, UndefinedRatioError
from .grid_field import GridDomain, RegionMask, ScalarField, gradient, hessian
from .monotone import unit_ball_volume
from .solvers import free_boundary_distance


class HalfPlaneKind(StrEnum):
    BERNOULLI = "bernoulli"
    CAPILLARY = "capillary"


@dataclass(frozen=True)
class HalfPlaneSpec:
    """Flat model solution whose free boundary is {y . normal = offset}.

    Bernoulli: v = ((y - offset normal) . (-normal))_+.
    Capillary: the same profile scaled by tan(theta), the graph of a half-plane
    meeting the base plane at angle theta.
    """

    kind: HalfPlaneKind
    normal: tuple[float, ...]
    theta: float | None = None
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", HalfPlaneKind(self.kind))
        object.__setattr__(self, "normal", tuple(float(c) for c in self.normal))
        if not math.isclose(math.hypot(*self.normal), 1.0, rel_tol=1e-9):
            raise ParameterError(f"half-plane normal must be a unit vector, got {self.normal}")
        if self.kind is HalfPlaneKind.CAPILLARY:
            if self.theta is None or not 0 < self.theta <= RIGHT_ANGLE:
                raise ParameterError(f"capillary half-plane needs theta in (0, pi/2], got {self.theta}")

    @property
    def slope(self) -> float:
        if self.kind is HalfPlaneKind.BERNOULLI:
            return 1.0
        if math.isclose(self.theta, RIGHT_ANGLE):
            return VERTICAL_GRAPH_SLOPE
        return math.tan(self.theta)

    def bernoulli_counterpart(self) -> HalfPlaneSpec:
        return HalfPlaneSpec(HalfPlaneKind.BERNOULLI, self.normal, offset=self.offset)


def evaluate(spec: HalfPlaneSpec, grid: GridDomain) -> ScalarField:
    if len(spec.normal) != grid.dim:
        raise ParameterError(f"normal {spec.normal} does not live in dimension {grid.dim}")
    signed = spec.offset - grid.points @ np.asarray(spec.normal)
    return ScalarField(grid, spec.slope * np.maximum(signed, 0.0))


def exact_density(spec: HalfPlaneSpec) -> float:
    """Density ratio of the capillary half-plane at points of its free boundary."""
    if spec.kind is not HalfPlaneKind.CAPILLARY:
        raise ParameterError("density ratio target is defined for capillary half-planes")
    return (1.0 - math.cos(spec.theta)) / 2.0


def exact_weiss(n: int) -> float:
    return unit_ball_volume(n) / 2.0


def curvature_support(u: ScalarField) -> np.ndarray:
    """Positive nodes at least two cells away from the free boundary."""
    margin = FREE_BOUNDARY_MARGIN_CELLS * u.domain.spacing * (1.0 - 1e-9)
    return (u.values > 0.0) & (free_boundary_distance(u) >= margin)


def second_fundamental_norm(u: ScalarField) -> ScalarField:
    """|A| of the graph of u, zero off curvature_support(u).

    |A|^2 = tr(g^-1 A g^-1 A) with g^-1 = I - p p^T / (1 + |p|^2) and
    A = D^2 u / sqrt(1 + |p|^2), p = Du.
    """
    p = gradient(u).values
    n = u.domain.dim
    stretch = 1.0 + np.sum(p**2, axis=-1)
    inverse_metric = np.eye(n) - p[..., :, None] * p[..., None, :] / stretch[..., None, None]
    form = hessian(u).values / np.sqrt(stretch)[..., None, None]
    mixed = inverse_metric @ form
    squared = np.einsum("...ij,...ji->...", mixed, mixed)
    norm = np.sqrt(np.maximum(squared, 0.0))
    return ScalarField(u.domain, np.where(curvature_support(u), norm, 0.0))


def curvature_ratio(u: ScalarField, theta: float, near_band: float, window: RegionMask) -> float:
    """max |A| / sin(theta) over supported nodes with 0 < u < near_band inside the window."""
    if not 0 < theta < math.pi:
        raise ParameterError(f"contact angle must lie in (0, pi), got {theta}")
    if near_band <= 0:
        raise ParameterError(f"near_band must be positive, got {near_band}")
    norm = second_fundamental_norm(u)
    members = (
        curvature_support(u)
        & (u.values < near_band)
        & (window.weights >= 0.5)
    )
    if not np.any(members):
        raise UndefinedRatioError("no graph nodes inside the band and window")
    return float(np.max(norm.values[members])) / math.sin(theta)
