"""Tests for fblab/solvers.py - minimizers and free-boundary geometry."""

from __future__ import annotations

import math

import numpy as np
import pytest
from fblab.exceptions import GridMismatchError, ParameterError, UndefinedDistanceError
from fblab.functionals import ac_energy
from fblab.grid_field import ScalarField, full_mask, make_grid, nodal_mask, sample
from fblab.solvers import (
    SolveParams,
    capillary_width_scale,
    free_boundary,
    free_boundary_distance,
    free_boundary_slope,
    hausdorff_distance,
    nearest_free_boundary_point,
    solve_ac,
    solve_capillary,
)


def _half_plane(grid, slope=1.0, offset=0.0):
    return sample(lambda p: slope * np.maximum(offset - p[..., 0], 0.0), grid, vectorized=True)


def _last_edge_slopes(field):
    """Drop across each edge leaving the wet set along the first axis, over h."""
    v = field.values
    edge = (v[:-1] > 0.0) & (v[1:] <= 0.0)
    return (v[:-1] - v[1:])[edge] / field.domain.spacing


class TestSolveParams:
    """Tests for SolveParams validation and width schedules."""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"smoothing_schedule": ()},
            {"smoothing_schedule": (2.0, -1.0)},
            {"smoothing_schedule": (1.0, 2.0)},
            {"backtrack_factor": 1.0},
            {"initial_step": 0.0},
            {"max_iterations": 0},
            {"tolerance": 0.0},
            {"harmonic_iterations": -1},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            SolveParams(**kwargs)

    def test_schedule_coerced_to_floats(self):
        assert SolveParams(smoothing_schedule=[4, 2, 1]).smoothing_schedule == (4.0, 2.0, 1.0)

    def test_widths_capped_and_deduplicated(self):
        """Widths above 0.1 L collapse onto the cap."""
        params = SolveParams()
        assert params.widths(make_grid(1, 1.0, 16)) == pytest.approx((0.1,))
        assert params.widths(make_grid(1, 1.0, 64)) == pytest.approx((0.1, 0.0625, 0.03125))

    def test_widths_scale(self):
        params = SolveParams()
        assert params.widths(make_grid(1, 1.0, 64), 0.5) == pytest.approx((0.0625, 0.03125, 0.015625))

    def test_capillary_width_scale(self):
        assert capillary_width_scale(math.pi / 2) == 1.0
        assert capillary_width_scale(math.pi / 4) == pytest.approx(1.0)
        assert capillary_width_scale(0.1) == pytest.approx(math.tan(0.1))


class TestSolveAc:
    """Tests for solve_ac."""

    def test_zero_boundary_is_trivial(self):
        """Zero data gives the zero minimizer without any descent step."""
        grid = make_grid(2, 1.0, 16)
        result = solve_ac(grid, ScalarField(grid, np.zeros(grid.shape)), SolveParams())
        assert result.converged
        assert result.iterations == 0
        assert np.all(result.field.values == 0.0)

    def test_negative_boundary_data(self):
        grid = make_grid(1, 1.0, 16)
        with pytest.raises(ParameterError, match="nonnegative"):
            solve_ac(grid, ScalarField(grid, np.full(grid.shape, -1.0)), SolveParams())

    def test_grid_mismatch(self):
        grid = make_grid(1, 1.0, 16)
        other = make_grid(1, 1.0, 32)
        with pytest.raises(GridMismatchError):
            solve_ac(grid, ScalarField(other, np.zeros(other.shape)), SolveParams())

    @pytest.mark.parametrize("a", [0.5, 1.0, 1.5])
    def test_one_dimensional_energy(self, a):
        """With v(-1) = a and v(1) = 0 the minimizer has slope 1 and energy 2a."""
        grid = make_grid(1, 1.0, 128)
        boundary = ScalarField(grid, np.where(grid.axis == -1.0, a, 0.0))
        result = solve_ac(grid, boundary, SolveParams(max_iterations=3000))
        assert ac_energy(result.field, full_mask(grid)) == pytest.approx(2 * a, rel=0.05)
        crossing = free_boundary(result.field)
        assert crossing.shape == (1, 1)
        assert crossing[0, 0] == pytest.approx(a - 1.0, abs=3 * grid.spacing)

    def test_result_invariants(self):
        """Nonnegative, equal to the data on the boundary, energy never increasing."""
        grid = make_grid(1, 1.0, 64)
        boundary = _half_plane(grid, offset=0.2)
        result = solve_ac(grid, boundary, SolveParams(max_iterations=2000))
        values = result.field.values
        assert np.all(values >= 0.0)
        assert np.array_equal(values[grid.boundary_nodes], boundary.values[grid.boundary_nodes])
        for history in (*result.stage_histories, result.polish_history):
            assert np.all(np.diff(history) <= 1e-12)
        assert result.energy_history == result.stage_histories[-1]
        assert result.schedule == SolveParams().widths(grid)

    def test_deterministic(self):
        """Two solves of the same problem agree bit for bit."""
        grid = make_grid(1, 1.0, 64)
        boundary = _half_plane(grid, offset=0.2)
        params = SolveParams(max_iterations=2000)
        first = solve_ac(grid, boundary, params)
        second = solve_ac(grid, boundary, params)
        assert np.array_equal(first.field.values, second.field.values)
        assert first.energy_history == second.energy_history
        assert first.iterations == second.iterations

    def test_scaling(self):
        """On [-2, 2] the solve reproduces the doubled solution on [-1, 1]."""
        unit = make_grid(1, 1.0, 64)
        wide = make_grid(1, 2.0, 64)
        params = SolveParams(max_iterations=3000)
        small = solve_ac(unit, _half_plane(unit, offset=0.2), params).field
        large = solve_ac(wide, _half_plane(wide, offset=0.4), params).field
        assert np.max(np.abs(large.values - 2.0 * small.values)) <= 2 * wide.spacing
        assert free_boundary(large)[0, 0] == pytest.approx(
            2.0 * free_boundary(small)[0, 0], abs=2 * wide.spacing
        )

    @pytest.mark.slow
    def test_half_plane_slope_law(self):
        """Half-plane data in 2D: the solved free boundary has slope 1."""
        grid = make_grid(2, 1.0, 64)
        result = solve_ac(grid, _half_plane(grid), SolveParams())
        assert free_boundary_slope(result.field) == pytest.approx(1.0, abs=0.15)


class TestSolveCapillary:
    """Tests for solve_capillary."""

    @pytest.mark.parametrize("theta", [0.0, 2.0])
    def test_rejects_angle(self, theta):
        grid = make_grid(1, 1.0, 16)
        with pytest.raises(ParameterError, match="theta"):
            solve_capillary(grid, ScalarField(grid, np.zeros(grid.shape)), theta, SolveParams())

    def test_result_invariants(self):
        grid = make_grid(1, 1.0, 64)
        theta = math.pi / 4
        boundary = _half_plane(grid, math.tan(theta), 0.2)
        result = solve_capillary(grid, boundary, theta, SolveParams(max_iterations=2000))
        assert np.all(result.field.values >= 0.0)
        assert np.array_equal(
            result.field.values[grid.boundary_nodes], boundary.values[grid.boundary_nodes]
        )
        for history in (*result.stage_histories, result.polish_history):
            assert np.all(np.diff(history) <= 1e-12)

    @pytest.mark.parametrize("theta", [0.1, 0.3])
    def test_one_dimensional_contact(self, theta):
        """u(-1) = tan(theta), u(1) = 0: the wet set ends at 0 and the last edge has slope tan(theta)."""
        grid = make_grid(1, 1.0, 64)
        boundary = _half_plane(grid, math.tan(theta))
        result = solve_capillary(grid, boundary, theta, SolveParams())
        crossing = free_boundary(result.field)
        assert crossing.shape == (1, 1)
        assert crossing[0, 0] == pytest.approx(0.0, abs=2 * grid.spacing)
        slopes = _last_edge_slopes(result.field)
        assert len(slopes) == 1
        assert slopes[0] == pytest.approx(math.tan(theta), rel=0.1)

    @pytest.mark.slow
    @pytest.mark.parametrize("theta", [0.2, 0.4, math.pi / 3])
    def test_half_plane_slope_law(self, theta):
        """The solved contact slope is tan(theta), also across the last wet edge."""
        grid = make_grid(2, 1.0, 64)
        result = solve_capillary(grid, _half_plane(grid, math.tan(theta)), theta, SolveParams())
        assert free_boundary_slope(result.field) == pytest.approx(math.tan(theta), rel=0.15)
        assert float(np.median(_last_edge_slopes(result.field))) == pytest.approx(math.tan(theta), rel=0.1)

    def test_deterministic(self):
        grid = make_grid(1, 1.0, 64)
        theta = math.pi / 4
        boundary = _half_plane(grid, math.tan(theta), 0.2)
        params = SolveParams(max_iterations=2000)
        first = solve_capillary(grid, boundary, theta, params)
        second = solve_capillary(grid, boundary, theta, params)
        assert np.array_equal(first.field.values, second.field.values)
        assert first.polish_history == second.polish_history


class TestFreeBoundary:
    """Tests for free-boundary extraction and distances."""

    def test_crossing_interpolated(self):
        grid = make_grid(1, 1.0, 16)
        points = free_boundary(sample(lambda p: 0.3 - p[0], grid))
        assert points.shape == (1, 1)
        assert points[0, 0] == pytest.approx(0.3)

    def test_zero_node_is_the_crossing(self):
        grid = make_grid(1, 1.0, 16)
        points = free_boundary(_half_plane(grid))
        assert points[:, 0] == pytest.approx([0.0])

    def test_line_in_two_dimensions(self):
        grid = make_grid(2, 1.0, 16)
        points = free_boundary(_half_plane(grid, offset=0.3))
        assert len(points) == grid.nodes_per_axis + 1
        assert points[:, 0] == pytest.approx(np.full(len(points), 0.3))

    def test_nearest_point(self):
        grid = make_grid(2, 1.0, 16)
        f = _half_plane(grid, offset=0.3)
        assert nearest_free_boundary_point(f, (0.0, 0.1)) == pytest.approx([0.3, 0.125])

    def test_no_free_boundary(self):
        grid = make_grid(2, 1.0, 16)
        zero = ScalarField(grid, np.zeros(grid.shape))
        assert len(free_boundary(zero)) == 0
        assert np.all(np.isinf(free_boundary_distance(zero)))
        with pytest.raises(UndefinedDistanceError):
            nearest_free_boundary_point(zero, (0.0, 0.0))
        with pytest.raises(UndefinedDistanceError):
            free_boundary_slope(zero)

    def test_distance_to_line(self):
        grid = make_grid(2, 1.0, 16)
        distance = free_boundary_distance(_half_plane(grid))
        assert distance[grid.node_index((-0.5, 0.25))] == pytest.approx(0.5)

    def test_slope_of_half_plane(self):
        grid = make_grid(2, 1.0, 32)
        assert free_boundary_slope(_half_plane(grid, 2.0)) == pytest.approx(2.0)


class TestHausdorff:
    """Tests for hausdorff_distance."""

    def test_symmetric(self):
        grid = make_grid(2, 1.0, 16)
        window = full_mask(grid)
        a = np.array([[0.0, 0.0]])
        b = np.array([[0.3, 0.0], [0.0, 0.1]])
        assert hausdorff_distance(a, b, window) == pytest.approx(0.3)
        assert hausdorff_distance(b, a, window) == pytest.approx(0.3)

    def test_restricted_to_window(self):
        """Points where the window weight is below 1/2 are ignored."""
        grid = make_grid(2, 1.0, 16)
        members = grid.points[..., 0] <= 0.5
        window = nodal_mask(grid, members)
        a = np.array([[0.0, 0.0], [0.9, 0.0]])
        b = np.array([[0.25, 0.0]])
        assert hausdorff_distance(a, b, window) == pytest.approx(0.25)

    def test_empty_inside_window(self):
        grid = make_grid(2, 1.0, 16)
        window = nodal_mask(grid, np.zeros(grid.shape, dtype=bool))
        with pytest.raises(UndefinedDistanceError):
            hausdorff_distance(np.array([[0.0, 0.0]]), np.array([[0.1, 0.0]]), window)
