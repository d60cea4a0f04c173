"""Minimizers of the two energies, free-boundary extraction and Hausdorff distances.

Both solvers run projected gradient descent (Barzilai-Borwein trial steps,
Armijo backtracking, clamp at zero) on the smoothed energy, continued over a
decreasing schedule of indicator widths. The smoothed minimizer keeps a thin
positive tail where the quintic step is flat, so a final pass zeroes every node
below half the last width and relaxes the field with its support frozen.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.spatial import cKDTree

from .constants import (
    ARMIJO_SIGMA,
    BB_STEP_MAX,
    BB_STEP_MIN,
    DEFAULT_SMOOTHING_SCHEDULE,
    FREE_BOUNDARY_MARGIN_CELLS,
    HARMONIC_INIT_ITERATIONS,
    MAX_BACKTRACKS,
    MAX_SMOOTHING_FRACTION,
    RIGHT_ANGLE,
)
from .exceptions import GridMismatchError, ParameterError, UndefinedDistanceError
from .functionals import SmoothingParams, ac_energy_smoothed, capillary_energy_smoothed
from .grid_field import (
    GridDomain,
    RegionMask,
    ScalarField,
    full_mask,
    positivity_gradient,
    squared_edge_gradient,
    squared_edge_gradient_adjoint,
)

log = structlog.get_logger("fblab.solvers")

EnergyFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class SolveParams:
    """Descent controls. The smoothing schedule is given in units of the grid spacing."""

    smoothing_schedule: tuple[float, ...] = DEFAULT_SMOOTHING_SCHEDULE
    initial_step: float = 1e-3
    backtrack_factor: float = 0.5
    max_iterations: int = 5000
    tolerance: float = 1e-6
    harmonic_iterations: int = HARMONIC_INIT_ITERATIONS

    def __post_init__(self):
        schedule = tuple(float(d) for d in self.smoothing_schedule)
        object.__setattr__(self, "smoothing_schedule", schedule)
        if not schedule:
            raise ParameterError("smoothing schedule must not be empty")
        if any(d <= 0 or not math.isfinite(d) for d in schedule):
            raise ParameterError(f"smoothing schedule must be positive, got {list(schedule)}")
        if any(b >= a for a, b in zip(schedule, schedule[1:])):
            raise ParameterError(f"smoothing schedule must strictly decrease, got {list(schedule)}")
        if not 0 < self.backtrack_factor < 1:
            raise ParameterError(f"backtrack_factor must lie in (0, 1), got {self.backtrack_factor}")
        if self.initial_step <= 0:
            raise ParameterError(f"initial_step must be positive, got {self.initial_step}")
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.tolerance <= 0:
            raise ParameterError(f"tolerance must be positive, got {self.tolerance}")
        if self.harmonic_iterations < 0:
            raise ParameterError("harmonic_iterations must be >= 0")

    def widths(self, grid: GridDomain, scale: float = 1.0) -> tuple[float, ...]:
        """Absolute indicator widths, capped at a tenth of the half width."""
        cap = MAX_SMOOTHING_FRACTION * grid.half_width
        widths: list[float] = []
        for multiple in self.smoothing_schedule:
            delta = min(multiple * grid.spacing * scale, cap)
            if not widths or delta < widths[-1]:
                widths.append(delta)
        return tuple(widths)


@dataclass(frozen=True, eq=False)
class SolveResult:
    field: ScalarField
    iterations: int
    final_gradient_norm: float
    energy_history: tuple[float, ...]
    converged: bool
    schedule: tuple[float, ...] = ()
    stage_histories: tuple[tuple[float, ...], ...] = ()
    polish_history: tuple[float, ...] = ()
    pruned_nodes: int = 0


@dataclass
class _Descent:
    values: np.ndarray
    history: list[float]
    iterations: int
    gradient_norm: float
    converged: bool


def _projected_descent(
    energy: EnergyFn,
    start: np.ndarray,
    fixed: np.ndarray,
    params: SolveParams,
    cell_volume: float,
    *,
    project: bool = True,
    max_iterations: int | None = None,
) -> _Descent:
    """Minimize energy over fields equal to start on fixed nodes (and >= 0 if project)."""

    def projected(values: np.ndarray, grad: np.ndarray) -> np.ndarray:
        out = np.where(fixed, 0.0, grad)
        if project:
            out = np.where((values <= 0.0) & (out > 0.0), 0.0, out)
        return out

    values = start.copy()
    current, grad = energy(values)
    history = [current]
    norm = math.sqrt(float(np.sum(projected(values, grad) ** 2)) * cell_volume)
    step = params.initial_step
    limit = params.max_iterations if max_iterations is None else max_iterations
    iterations = 0
    while norm > params.tolerance and iterations < limit:
        trial_step = step
        for _ in range(MAX_BACKTRACKS):
            trial = values - trial_step * grad
            if project:
                trial = np.maximum(trial, 0.0)
            trial[fixed] = values[fixed]
            trial_energy, trial_grad = energy(trial)
            decrease = float(np.sum(grad * (trial - values))) * cell_volume
            if trial_energy <= current + ARMIJO_SIGMA * decrease:
                break
            trial_step *= params.backtrack_factor
        else:
            log.debug("line_search_stalled", iterations=iterations, gradient_norm=norm)
            break
        s = trial - values
        y = trial_grad - grad
        sy = float(np.sum(s * y))
        if sy > 0:
            step = min(max(float(np.sum(s * s)) / sy, BB_STEP_MIN), BB_STEP_MAX)
        else:
            step = params.initial_step
        values, current, grad = trial, trial_energy, trial_grad
        history.append(current)
        norm = math.sqrt(float(np.sum(projected(values, grad) ** 2)) * cell_volume)
        iterations += 1
    return _Descent(values, history, iterations, norm, norm <= params.tolerance)


def _dirichlet_energy(grid: GridDomain, weights: np.ndarray) -> EnergyFn:
    h = grid.spacing
    cell = h**grid.dim

    def energy(values: np.ndarray) -> tuple[float, np.ndarray]:
        total = float(np.sum(squared_edge_gradient(values, h) * weights)) * cell
        return total, squared_edge_gradient_adjoint(values, weights, h)

    return energy


def _check_boundary(grid: GridDomain, boundary: ScalarField) -> np.ndarray:
    if boundary.domain != grid:
        raise GridMismatchError(f"boundary data lives on {boundary.domain}, expected {grid}")
    data = boundary.values[grid.boundary_nodes]
    if np.any(data < 0):
        raise ParameterError(f"boundary data must be nonnegative (min {float(np.min(data))})")
    return data


def harmonic_extension(grid: GridDomain, boundary: ScalarField, params: SolveParams) -> np.ndarray:
    """Descent on the Dirichlet energy from the boundary data, clamped at 0."""
    data = _check_boundary(grid, boundary)
    fixed = grid.boundary_nodes
    start = np.where(fixed, boundary.values, float(np.mean(data)))
    result = _projected_descent(
        _dirichlet_energy(grid, full_mask(grid).weights),
        start,
        fixed,
        params,
        grid.spacing**grid.dim,
        project=False,
        max_iterations=params.harmonic_iterations,
    )
    return np.maximum(result.values, 0.0)


def _continuation(
    grid: GridDomain,
    start: np.ndarray,
    widths: tuple[float, ...],
    make_energy: Callable[[SmoothingParams], EnergyFn],
    params: SolveParams,
    solver: str,
) -> tuple[np.ndarray, list[_Descent]]:
    values = start
    stages: list[_Descent] = []
    for delta in widths:
        stage = _projected_descent(
            make_energy(SmoothingParams(delta)),
            values,
            grid.boundary_nodes,
            params,
            grid.spacing**grid.dim,
        )
        log.debug(
            "solve_stage",
            solver=solver,
            delta=delta,
            iterations=stage.iterations,
            gradient_norm=stage.gradient_norm,
            converged=stage.converged,
        )
        stages.append(stage)
        values = stage.values
    return values, stages


def _prune(grid: GridDomain, values: np.ndarray, width: float) -> tuple[np.ndarray, np.ndarray]:
    pruned = (values < 0.5 * width) & ~grid.boundary_nodes
    return np.where(pruned, 0.0, values), pruned


def _finish(
    grid: GridDomain,
    stages: list[_Descent],
    polish: _Descent,
    widths: tuple[float, ...],
    pruned: np.ndarray,
    solver: str,
) -> SolveResult:
    converged = stages[-1].converged and polish.converged
    iterations = sum(stage.iterations for stage in stages) + polish.iterations
    if not converged:
        log.warning(
            "solve_not_converged",
            solver=solver,
            iterations=iterations,
            gradient_norm=polish.gradient_norm,
        )
    return SolveResult(
        field=ScalarField(grid, polish.values),
        iterations=iterations,
        final_gradient_norm=polish.gradient_norm,
        energy_history=tuple(stages[-1].history),
        converged=converged,
        schedule=widths,
        stage_histories=tuple(tuple(stage.history) for stage in stages),
        polish_history=tuple(polish.history),
        pruned_nodes=int(np.count_nonzero(pruned)),
    )


def solve_ac(grid: GridDomain, boundary: ScalarField, params: SolveParams) -> SolveResult:
    """Minimize the Alt-Caffarelli energy over v >= 0 with v = boundary on the cube boundary."""
    _check_boundary(grid, boundary)
    region = full_mask(grid)
    widths = params.widths(grid)

    def make_energy(smoothing: SmoothingParams) -> EnergyFn:
        def energy(values: np.ndarray) -> tuple[float, np.ndarray]:
            total, direction = ac_energy_smoothed(ScalarField(grid, values), smoothing, region)
            return total, direction.values

        return energy

    start = harmonic_extension(grid, boundary, params)
    values, stages = _continuation(grid, start, widths, make_energy, params, "ac")
    values, pruned = _prune(grid, values, widths[-1])
    # With the zero set frozen the indicator term is constant.
    polish = _projected_descent(
        _dirichlet_energy(grid, region.weights),
        values,
        grid.boundary_nodes | pruned,
        params,
        grid.spacing**grid.dim,
    )
    return _finish(grid, stages, polish, widths, pruned, "ac")


def _excess_area_energy(grid: GridDomain, weights: np.ndarray) -> EnergyFn:
    h = grid.spacing
    cell = h**grid.dim

    def energy(values: np.ndarray) -> tuple[float, np.ndarray]:
        area = np.sqrt(1.0 + squared_edge_gradient(values, h))
        total = float(np.sum((area - 1.0) * weights)) * cell
        return total, squared_edge_gradient_adjoint(values, weights / (2.0 * area), h)

    return energy


def capillary_width_scale(theta: float) -> float:
    """Heights scale like tan(theta) times the Bernoulli profile."""
    if theta >= RIGHT_ANGLE:
        return 1.0
    return math.tan(theta)


def solve_capillary(
    grid: GridDomain, boundary: ScalarField, theta: float, params: SolveParams
) -> SolveResult:
    """Minimize the capillary graph energy over u >= 0 with u = boundary on the cube boundary."""
    if not 0 < theta <= RIGHT_ANGLE * (1 + 1e-12):
        raise ParameterError(f"capillary solves need theta in (0, pi/2], got {theta}")
    _check_boundary(grid, boundary)
    region = full_mask(grid)
    widths = params.widths(grid, capillary_width_scale(theta))

    def make_energy(smoothing: SmoothingParams) -> EnergyFn:
        def energy(values: np.ndarray) -> tuple[float, np.ndarray]:
            total, direction = capillary_energy_smoothed(
                ScalarField(grid, values), theta, smoothing, region
            )
            return total, direction.values

        return energy

    start = harmonic_extension(grid, boundary, params)
    values, stages = _continuation(grid, start, widths, make_energy, params, "capillary")
    values, pruned = _prune(grid, values, widths[-1])
    # With the zero set frozen the wetted-area term is constant; the excess area
    # is charged on every node so edges into the dry set keep their full weight.
    polish = _projected_descent(
        _excess_area_energy(grid, region.weights),
        values,
        grid.boundary_nodes | pruned,
        params,
        grid.spacing**grid.dim,
    )
    return _finish(grid, stages, polish, widths, pruned, "capillary")


# --- free boundaries -------------------------------------------------------


def free_boundary(f: ScalarField) -> np.ndarray:
    """Zero crossings along grid edges between positive and nonpositive nodes.

    Crossings are linearly interpolated; a nonpositive endpoint equal to zero is
    the crossing itself. Returns unique points, shaped (k, dim).
    """
    grid = f.domain
    found: list[np.ndarray] = []
    for axis in range(grid.dim):
        v = np.moveaxis(f.values, axis, 0)
        p = np.moveaxis(grid.points, axis, 0)
        head, tail = slice(None, -1), slice(1, None)
        for inner, outer in ((head, tail), (tail, head)):
            a, b = v[inner], v[outer]
            crossing = (a > 0.0) & (b <= 0.0)
            if not np.any(crossing):
                continue
            pa, pb = p[inner][crossing], p[outer][crossing]
            t = (a[crossing] / (a[crossing] - b[crossing]))[:, None]
            found.append((1.0 - t) * pa + t * pb)
    if not found:
        return np.empty((0, grid.dim))
    return np.unique(np.concatenate(found), axis=0)


def nearest_free_boundary_point(f: ScalarField, x: np.ndarray | tuple[float, ...]) -> np.ndarray:
    points = free_boundary(f)
    if len(points) == 0:
        raise UndefinedDistanceError("field has no free boundary")
    _, index = cKDTree(points).query(f.domain.check_point(x))
    return points[int(index)]


def free_boundary_distance(f: ScalarField) -> np.ndarray:
    """Distance from every node to the free boundary of f (inf when there is none)."""
    points = free_boundary(f)
    grid = f.domain
    if len(points) == 0:
        return np.full(grid.shape, np.inf)
    distance, _ = cKDTree(points).query(grid.points.reshape(-1, grid.dim))
    return distance.reshape(grid.shape)


def free_boundary_slope(f: ScalarField) -> float:
    """Median |Df| over positive nodes within two cells of the free boundary."""
    distance = free_boundary_distance(f)
    margin = FREE_BOUNDARY_MARGIN_CELLS * f.domain.spacing * (1 + 1e-9)
    near = (f.values > 0.0) & (distance <= margin)
    if not np.any(near):
        raise UndefinedDistanceError("field has no free boundary")
    return float(np.median(positivity_gradient(f).norm()[near]))


def hausdorff_distance(A: np.ndarray, B: np.ndarray, window: RegionMask) -> float:
    """Symmetric Hausdorff distance between the parts of A and B inside the window.

    A point is inside when the interpolated window weight is at least 1/2.
    """
    n = window.domain.dim
    restricted = []
    for points in (A, B):
        points = np.asarray(points, dtype=float).reshape(-1, n)
        if len(points):
            points = points[window.at(points) >= 0.5]
        if not len(points):
            raise UndefinedDistanceError("point set is empty inside the window")
        restricted.append(points)
    a, b = restricted
    forward = cKDTree(b).query(a)[0].max()
    backward = cKDTree(a).query(b)[0].max()
    return float(max(forward, backward))
