"""Uniform Cartesian grids, node-sampled fields, finite differences and quadrature.

Every other module works on these types. Fields are immutable: their value arrays
are copied on construction and marked read-only, so they can be shared between
worker threads.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .constants import (
    COVERAGE_SUBSAMPLES,
    MIN_NODES_PER_AXIS,
    MIN_SPHERE_RADIUS_CELLS,
    SUPPORTED_DIMS,
)
from .exceptions import (
    DomainError,
    GridMismatchError,
    ParameterError,
    ResolutionError,
    SamplingError,
)

_RELATIVE_SLOP = 1e-12


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class GridDomain:
    """The cube [-L, L]^n covered by (N+1)^n equally spaced nodes."""

    dim: int
    half_width: float
    nodes_per_axis: int

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ParameterError(f"dim must be one of {SUPPORTED_DIMS}, got {self.dim}")
        if not math.isfinite(self.half_width) or self.half_width <= 0:
            raise ParameterError(f"half_width must be positive and finite, got {self.half_width}")
        if self.nodes_per_axis < MIN_NODES_PER_AXIS:
            raise ParameterError(
                f"nodes_per_axis must be >= {MIN_NODES_PER_AXIS}, got {self.nodes_per_axis}"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.nodes_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis + 1,) * self.dim

    @property
    def node_count(self) -> int:
        return (self.nodes_per_axis + 1) ** self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Node coordinates along one axis: -L + i*h."""
        return _readonly(-self.half_width + np.arange(self.nodes_per_axis + 1) * self.spacing)

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shaped (*shape, dim)."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return _readonly(np.stack(mesh, axis=-1))

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        """Boolean mask of nodes on the cube boundary (the Dirichlet nodes)."""
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.dim):
            for end in (0, -1):
                index = [slice(None)] * self.dim
                index[axis] = end
                mask[tuple(index)] = True
        return _readonly(mask)

    @cached_property
    def clip_factor(self) -> np.ndarray:
        """Fraction of each node's dual cell that lies inside the cube."""
        factor = np.ones(self.shape)
        for axis in range(self.dim):
            for end in (0, -1):
                index = [slice(None)] * self.dim
                index[axis] = end
                factor[tuple(index)] *= 0.5
        return _readonly(factor)

    def check_point(self, x: Sequence[float] | np.ndarray) -> np.ndarray:
        point = np.asarray(x, dtype=float).reshape(-1)
        if point.shape != (self.dim,):
            raise ParameterError(f"point {list(point)} does not have dimension {self.dim}")
        return point

    def contains_ball(self, center: Sequence[float] | np.ndarray, radius: float) -> bool:
        point = self.check_point(center)
        limit = self.half_width * (1.0 + _RELATIVE_SLOP)
        return bool(np.all(np.abs(point) + radius <= limit))

    def node_index(self, point: Sequence[float] | np.ndarray) -> tuple[int, ...]:
        """Index of the node nearest to a point."""
        coords = self.check_point(point)
        index = np.rint((coords + self.half_width) / self.spacing).astype(int)
        return tuple(int(i) for i in np.clip(index, 0, self.nodes_per_axis))


def make_grid(dim: int, half_width: float, nodes_per_axis: int) -> GridDomain:
    return GridDomain(dim=int(dim), half_width=float(half_width), nodes_per_axis=int(nodes_per_axis))


def _coerce_values(domain: GridDomain, values: np.ndarray | Sequence[float], trailing: tuple) -> np.ndarray:
    array = np.array(values, dtype=float)
    expected = domain.shape + trailing
    if array.shape != expected:
        if array.size == math.prod(expected):
            array = array.reshape(expected)
        else:
            raise GridMismatchError(f"values of shape {array.shape} do not fit grid shape {expected}")
    return array


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real value per grid node."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = _coerce_values(self.domain, self.values, ())
        if not np.all(np.isfinite(values)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(values))[0])
            raise ParameterError(f"field value at node {bad} is not finite")
        object.__setattr__(self, "values", _readonly(values))

    @cached_property
    def interpolator(self) -> RegularGridInterpolator:
        axes = (self.domain.axis,) * self.domain.dim
        return RegularGridInterpolator(
            axes, self.values, method="linear", bounds_error=False, fill_value=None
        )

    def at(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation at points shaped (..., dim)."""
        return self.interpolator(np.asarray(points, dtype=float))

    def with_values(self, values: np.ndarray) -> ScalarField:
        return ScalarField(self.domain, values)

    def scaled(self, factor: float) -> ScalarField:
        return ScalarField(self.domain, self.values * factor)


@dataclass(frozen=True, eq=False)
class VectorField:
    """One vector per node, shaped (*grid.shape, dim)."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = _coerce_values(self.domain, self.values, (self.domain.dim,))
        object.__setattr__(self, "values", _readonly(values))

    def component(self, axis: int) -> ScalarField:
        return ScalarField(self.domain, self.values[..., axis])

    def squared_norm(self) -> np.ndarray:
        return np.sum(self.values**2, axis=-1)

    def norm(self) -> np.ndarray:
        return np.sqrt(self.squared_norm())


@dataclass(frozen=True, eq=False)
class MatrixField:
    """One symmetric matrix per node, shaped (*grid.shape, dim, dim)."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        n = self.domain.dim
        values = _coerce_values(self.domain, self.values, (n, n))
        transposed = np.swapaxes(values, -1, -2)
        scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
        if not np.allclose(values, transposed, rtol=0.0, atol=1e-12 * scale):
            raise ParameterError("matrix field is not symmetric")
        object.__setattr__(self, "values", _readonly(values))


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Per-node weights in [0, 1]: the covered fraction of each node's dual cell."""

    domain: GridDomain
    weights: np.ndarray

    def __post_init__(self):
        weights = _coerce_values(self.domain, self.weights, ())
        if np.any(weights < -_RELATIVE_SLOP) or np.any(weights > 1.0 + _RELATIVE_SLOP):
            raise ParameterError("mask weights must lie in [0, 1]")
        object.__setattr__(self, "weights", _readonly(np.clip(weights, 0.0, 1.0)))

    @cached_property
    def interpolator(self) -> RegularGridInterpolator:
        axes = (self.domain.axis,) * self.domain.dim
        return RegularGridInterpolator(
            axes, self.weights, method="linear", bounds_error=False, fill_value=0.0
        )

    def at(self, points: np.ndarray) -> np.ndarray:
        return self.interpolator(np.asarray(points, dtype=float))

    def measure(self) -> float:
        h = self.domain.spacing
        return float(np.sum(self.weights) * h**self.domain.dim)


# --- region predicates -----------------------------------------------------


class Predicate:
    """Membership test for a region, evaluated on points shaped (..., dim)."""

    def __call__(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def at_nodes(self, grid: GridDomain) -> np.ndarray:
        return self(grid.points)


@dataclass(frozen=True, eq=False)
class Ball(Predicate):
    """Open ball |y - x| < r in the base plane."""

    center: tuple[float, ...]
    radius: float

    def __call__(self, points: np.ndarray) -> np.ndarray:
        offset = points - np.asarray(self.center, dtype=float)
        return np.sum(offset**2, axis=-1) < self.radius**2


@dataclass(frozen=True, eq=False)
class HalfSpace(Predicate):
    """Open half-space y . normal < offset."""

    normal: tuple[float, ...]
    offset: float

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return points @ np.asarray(self.normal, dtype=float) < self.offset


@dataclass(frozen=True, eq=False)
class Positivity(Predicate):
    """The open set {f > 0}, with f interpolated between nodes."""

    field: ScalarField

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.field.at(points) > 0.0

    def at_nodes(self, grid: GridDomain) -> np.ndarray:
        return self.field.values > 0.0


@dataclass(frozen=True, eq=False)
class LiftedBall(Predicate):
    """Points whose graph point (y, u(y)) lies in the open ball of radius r about x."""

    field: ScalarField
    center: tuple[float, ...]
    radius: float

    def __call__(self, points: np.ndarray) -> np.ndarray:
        offset = points - np.asarray(self.center, dtype=float)
        height = self.field.at(points)
        return np.sum(offset**2, axis=-1) + height**2 < self.radius**2

    def at_nodes(self, grid: GridDomain) -> np.ndarray:
        offset = grid.points - np.asarray(self.center, dtype=float)
        return np.sum(offset**2, axis=-1) + self.field.values**2 < self.radius**2


@dataclass(frozen=True, eq=False)
class Complement(Predicate):
    inner: Predicate

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return ~self.inner(points)

    def at_nodes(self, grid: GridDomain) -> np.ndarray:
        return ~self.inner.at_nodes(grid)


def straddling(nodal: np.ndarray) -> np.ndarray:
    """Nodes whose value differs from some node in their 3^n neighbourhood."""
    padded = np.pad(nodal, 1, mode="edge")
    out = np.zeros(nodal.shape, dtype=bool)
    for shift in itertools.product((-1, 0, 1), repeat=nodal.ndim):
        window = tuple(slice(1 + s, 1 + s + size) for s, size in zip(shift, nodal.shape))
        out |= padded[window] != nodal
    return out


def _subcell_offsets(grid: GridDomain, k: int = COVERAGE_SUBSAMPLES) -> np.ndarray:
    ticks = ((np.arange(k) + 0.5) / k - 0.5) * grid.spacing
    return np.array(list(itertools.product(ticks, repeat=grid.dim)))


def cell_average(
    grid: GridDomain,
    fn: Callable[[np.ndarray], np.ndarray],
    where: np.ndarray,
    subsamples: int = COVERAGE_SUBSAMPLES,
) -> np.ndarray:
    """fn at every node, replaced by its mean over the node's dual cell where flagged.

    fn takes points shaped (..., dim). Sub-samples outside the cube are dropped;
    fn only ever sees points clipped to the cube.
    """
    values = np.broadcast_to(np.asarray(fn(grid.points), dtype=float), grid.shape).copy()
    index = np.argwhere(where)
    if index.size:
        centers = grid.points[tuple(index.T)]
        samples = centers[:, None, :] + _subcell_offsets(grid, subsamples)[None, :, :]
        inside = np.all(np.abs(samples) <= grid.half_width, axis=-1)
        sampled = fn(np.clip(samples, -grid.half_width, grid.half_width))
        values[tuple(index.T)] = np.sum(sampled * inside, axis=-1) / inside.sum(axis=-1)
    return values


def region_mask(grid: GridDomain, *predicates: Predicate) -> RegionMask:
    """Coverage mask of the intersection of the given regions, clipped to the cube.

    Cells whose membership changes within a node's neighbourhood are sub-sampled
    on a 4^n grid; all others take their nodal membership.
    """
    nodal = np.ones(grid.shape, dtype=bool)
    for predicate in predicates:
        nodal &= predicate.at_nodes(grid)
    weights = nodal.astype(float)
    if predicates:
        index = np.argwhere(straddling(nodal))
        if index.size:
            centers = grid.points[tuple(index.T)]
            samples = centers[:, None, :] + _subcell_offsets(grid)[None, :, :]
            inside = np.all(np.abs(samples) <= grid.half_width, axis=-1)
            member = inside.copy()
            for predicate in predicates:
                member &= predicate(samples)
            weights[tuple(index.T)] = member.sum(axis=-1) / inside.sum(axis=-1)
    return RegionMask(grid, weights * grid.clip_factor)


def full_mask(grid: GridDomain) -> RegionMask:
    """The whole cube; integrating against it is the trapezoidal rule."""
    return RegionMask(grid, grid.clip_factor)


def nodal_mask(grid: GridDomain, members: np.ndarray) -> RegionMask:
    return RegionMask(grid, np.asarray(members, dtype=bool) * grid.clip_factor)


# --- sampling and calculus -------------------------------------------------


def sample(
    fn: Callable[[np.ndarray], float],
    grid: GridDomain,
    *,
    vectorized: bool = False,
) -> ScalarField:
    """Evaluate fn at every node.

    By default fn receives one point of shape (dim,) per call. With vectorized=True
    it receives all nodes at once, shaped (*grid.shape, dim).
    """
    if vectorized:
        values = np.broadcast_to(np.asarray(fn(grid.points), dtype=float), grid.shape).copy()
    else:
        flat = grid.points.reshape(-1, grid.dim)
        values = np.array([float(fn(point)) for point in flat]).reshape(grid.shape)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        index = tuple(int(i) for i in bad[0])
        coords = [float(c) for c in grid.points[index]]
        raise SamplingError(f"non-finite value {values[index]} at node {index} {coords}")
    return ScalarField(grid, values)


def interpolate(f: ScalarField, points: np.ndarray) -> np.ndarray:
    return f.at(points)


def _gradient_parts(values: np.ndarray, spacing: float) -> list[np.ndarray]:
    parts = np.gradient(values, spacing, edge_order=2)
    if values.ndim == 1:
        return [parts]
    return list(parts)


def gradient(f: ScalarField) -> VectorField:
    """Central differences inside, one-sided second-order differences on the boundary."""
    parts = _gradient_parts(f.values, f.domain.spacing)
    return VectorField(f.domain, np.stack(parts, axis=-1))


def positivity_gradient(f: ScalarField) -> VectorField:
    """Gradient of the positive branch of f.

    Where the central stencil along an axis straddles the free boundary (one
    neighbour nonpositive, the other positive), the one-sided difference toward
    the larger neighbour replaces the central one. Nodes on the free boundary
    then carry the slope of the positive phase.
    """
    h = f.domain.spacing
    parts = _gradient_parts(f.values, h)
    for axis, part in enumerate(parts):
        v = np.moveaxis(f.values, axis, 0)
        g = np.moveaxis(part, axis, 0)
        left, middle, right = v[:-2], v[1:-1], v[2:]
        touches = (np.minimum(left, right) <= 0.0) & (np.maximum(left, right) > 0.0)
        one_sided = np.where(right >= left, (right - middle) / h, (middle - left) / h)
        g[1:-1] = np.where(touches, one_sided, g[1:-1])
    return VectorField(f.domain, np.stack(parts, axis=-1))


def _second_difference(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    h2 = spacing**2
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
    return np.moveaxis(out, 0, axis)


def hessian(f: ScalarField) -> MatrixField:
    """Second differences; mixed partials average both orders of differentiation."""
    n = f.domain.dim
    h = f.domain.spacing
    out = np.empty(f.domain.shape + (n, n))
    for axis in range(n):
        out[..., axis, axis] = _second_difference(f.values, h, axis)
    first = _gradient_parts(f.values, h)
    for a, b in itertools.combinations(range(n), 2):
        mixed = 0.5 * (
            np.gradient(first[a], h, axis=b, edge_order=2)
            + np.gradient(first[b], h, axis=a, edge_order=2)
        )
        out[..., a, b] = mixed
        out[..., b, a] = mixed
    return MatrixField(f.domain, out)


def _edge_coefficients(count: int, ndim: int) -> np.ndarray:
    """Weight of each adjacent edge in a node's average: 1/2 inside, 1 at the ends."""
    coeff = np.full(count, 0.5)
    coeff[0] = coeff[-1] = 1.0
    return coeff.reshape((count,) + (1,) * (ndim - 1))


def squared_edge_gradient(values: np.ndarray, spacing: float) -> np.ndarray:
    """Per-node |Du|^2 built from squared forward differences on adjacent edges.

    Exact for affine fields. This is the Dirichlet density of every smoothed energy.
    """
    total = np.zeros(values.shape)
    for axis in range(values.ndim):
        v = np.moveaxis(values, axis, 0)
        squared = (np.diff(v, axis=0) / spacing) ** 2
        node = np.zeros(v.shape)
        node[:-1] += squared
        node[1:] += squared
        total += np.moveaxis(node * _edge_coefficients(v.shape[0], v.ndim), 0, axis)
    return total


def squared_edge_gradient_adjoint(
    values: np.ndarray, node_weights: np.ndarray, spacing: float
) -> np.ndarray:
    """Derivative of sum_i w_i S_i with respect to every node value.

    With w = 1 this is -2 times the five-point Laplacian at interior nodes.
    """
    out = np.zeros(values.shape)
    for axis in range(values.ndim):
        v = np.moveaxis(values, axis, 0)
        w = np.moveaxis(node_weights, axis, 0)
        coeff = _edge_coefficients(v.shape[0], v.ndim)
        beta = w[:-1] * coeff[:-1] + w[1:] * coeff[1:]
        flux = 2.0 * beta * np.diff(v, axis=0) / spacing**2
        node = np.zeros(v.shape)
        node[1:] += flux
        node[:-1] -= flux
        out += np.moveaxis(node, 0, axis)
    return out


# --- quadrature ------------------------------------------------------------


def _check_same_grid(a: GridDomain, b: GridDomain) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def integrate(integrand: ScalarField, mask: RegionMask) -> float:
    """Sum of integrand * weight * h^n."""
    _check_same_grid(integrand.domain, mask.domain)
    h = mask.domain.spacing
    return float(np.sum(integrand.values * mask.weights) * h**mask.domain.dim)


def integrate_values(values: np.ndarray, mask: RegionMask) -> float:
    if values.shape != mask.domain.shape:
        raise GridMismatchError(f"values of shape {values.shape} do not fit {mask.domain.shape}")
    h = mask.domain.spacing
    return float(np.sum(values * mask.weights) * h**mask.domain.dim)


def check_ball(grid: GridDomain, x: np.ndarray, r: float, min_cells: float) -> None:
    if r < min_cells * grid.spacing * (1.0 - _RELATIVE_SLOP):
        raise ResolutionError(
            f"radius {r} is below {min_cells} grid cells (h = {grid.spacing})"
        )
    if not grid.contains_ball(x, r):
        raise DomainError(f"ball of radius {r} about {list(x)} leaves the grid cube")


def sphere_integral(
    f: ScalarField,
    x: Sequence[float] | np.ndarray,
    r: float,
    *,
    power: int = 1,
) -> float:
    """Integral of f**power over the sphere of radius r about x.

    n=2 uses the trapezoidal rule with ceil(2*pi*r/h) samples of the bilinear
    interpolant; n=1 is the two-point sum. The power is applied after
    interpolation, so piecewise-linear fields are squared exactly.
    """
    grid = f.domain
    center = grid.check_point(x)
    check_ball(grid, center, r, MIN_SPHERE_RADIUS_CELLS)
    if grid.dim == 1:
        points = np.array([[center[0] - r], [center[0] + r]])
        return float(np.sum(f.at(points) ** power))
    count = math.ceil(2.0 * math.pi * r / grid.spacing - 1e-9)
    angles = 2.0 * math.pi * np.arange(count) / count
    points = center + r * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return float(np.sum(f.at(points) ** power) * 2.0 * math.pi * r / count)
