"""fblab constants."""

from __future__ import annotations

import math

SUPPORTED_DIMS = (1, 2)
MIN_NODES_PER_AXIS = 8

# Sphere quadrature needs the radius to span this many cells
MIN_SPHERE_RADIUS_CELLS = 4
# Monotone quantities need the radius to span this many cells
MIN_QUANTITY_RADIUS_CELLS = 8

# Sub-samples per axis for cells straddling a region boundary
COVERAGE_SUBSAMPLES = 4
# Radial samples along each ray of the crescent quadrature
RAY_SAMPLES = 65
# Samples of the radius integral in the averaging identity
AVERAGING_SAMPLES = 64
# Sub-samples per axis for cells meeting the transition band of a cutoff
CUTOFF_SUBSAMPLES = 8

NEGATIVITY_TOLERANCE = -1e-12
# Lip(u) <= SLOPE_BOUND_FACTOR * theta for the small-angle expansion
SLOPE_BOUND_FACTOR = 10.0
# Smoothing width must stay below this fraction of the half width
MAX_SMOOTHING_FRACTION = 0.1

DEFAULT_CUTOFF_EPS = 0.1
DEFAULT_SMOOTHING_SCHEDULE = (4.0, 2.0, 1.0)
HARMONIC_INIT_ITERATIONS = 200
ARMIJO_SIGMA = 1e-4
MAX_BACKTRACKS = 60
BB_STEP_MIN = 1e-14
BB_STEP_MAX = 1e6

# Free-boundary margin (in cells) for curvature and slope scans
FREE_BOUNDARY_MARGIN_CELLS = 2

# Monotonicity slack: scale * (RELATIVE_SLACK + SLACK_CELLS * h / r)
RELATIVE_SLACK = 0.02
SLACK_CELLS = 1.0

# A capillary half-plane at a right angle is vertical, not a graph; any
# tilted half-plane has the same density there, so the oracle uses this slope.
VERTICAL_GRAPH_SLOPE = 1.0
RIGHT_ANGLE = math.pi / 2

UNIT_BALL_VOLUMES = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}

BERNSTEIN_SCALES = (1.0, 2.0, 4.0)

FIELD_HEADER = "dim,half_width,nodes_per_axis"
FIELD_VALUES_HEADER = "value"
ENV_PREFIX = "FBLAB_"

# Curvature ratios at or below this count as flat
FLAT_CURVATURE_TOLERANCE = 1e-8
