"""fblab artifact writers: CSV tables, JSON reports, SVG line charts and field files.

Every file is written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np

from .constants import FIELD_HEADER, FIELD_VALUES_HEADER
from .exceptions import ConfigError, GridMismatchError, PreconditionError
from .grid_field import GridDomain, ScalarField, make_grid

CHART_WIDTH = 640
CHART_HEIGHT = 400
CHART_MARGIN = 60
SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _atomic_write(path: Path, content: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=path.parent, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        Path(temp_path).replace(path)
        return path
    except Exception:
        Path(temp_path).unlink(missing_ok=True)
        raise


def format_cell(value: Any) -> str:
    """Locale-free cell text: repr floats, lowercase booleans, empty for None."""
    if value is None:
        return ""
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, Sequence) and not isinstance(value, str):
        return " ".join(format_cell(v) for v in value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        writer.writerow([format_cell(v) for v in row])
    return _atomic_write(path, buffer.getvalue())


def write_json(path: Path, obj: Any) -> Path:
    return _atomic_write(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _tool_version() -> str:
    try:
        return version("fblab")
    except PackageNotFoundError:
        return "unknown"


@dataclass(frozen=True)
class Series:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]


def _axis_map(values: list[float], log_scale: bool, lo_px: float, hi_px: float):
    data = [math.log10(v) for v in values] if log_scale else list(values)
    lo, hi = min(data), max(data)
    if hi - lo < 1e-300:
        lo, hi = lo - 0.5, hi + 0.5

    def to_px(v: float) -> float:
        t = ((math.log10(v) if log_scale else v) - lo) / (hi - lo)
        return lo_px + t * (hi_px - lo_px)

    return to_px


def write_svg_line_chart(
    path: Path,
    series: Sequence[Series],
    *,
    title: str,
    x_label: str,
    y_label: str,
    log_x: bool = False,
    log_y: bool = False,
) -> Path:
    """Minimal line chart: frame, one polyline per series, axis labels and a legend.

    On log axes nonpositive points are dropped.
    """
    kept: list[tuple[str, list[tuple[float, float]]]] = []
    for s in series:
        points = [
            (float(x), float(y))
            for x, y in zip(s.xs, s.ys)
            if math.isfinite(x)
            and math.isfinite(y)
            and (not log_x or x > 0)
            and (not log_y or y > 0)
        ]
        kept.append((s.label, points))
    all_points = [p for _, points in kept for p in points]
    left, top = CHART_MARGIN, CHART_MARGIN
    right, bottom = CHART_WIDTH - CHART_MARGIN, CHART_HEIGHT - CHART_MARGIN
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CHART_WIDTH}" height="{CHART_HEIGHT}">',
        f"<!-- fblab {_tool_version()} -->",
        f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
        'fill="none" stroke="black"/>',
        f'<text x="{CHART_WIDTH / 2}" y="{top / 2}" text-anchor="middle">{title}</text>',
        f'<text x="{CHART_WIDTH / 2}" y="{CHART_HEIGHT - 15}" text-anchor="middle">{x_label}</text>',
        f'<text x="15" y="{CHART_HEIGHT / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {CHART_HEIGHT / 2})">{y_label}</text>',
    ]
    if all_points:
        xs = [p[0] for p in all_points]
        ys = [p[1] for p in all_points]
        to_x = _axis_map(xs, log_x, left, right)
        to_y = _axis_map(ys, log_y, bottom, top)
        for value, anchor in ((min(xs), "start"), (max(xs), "end")):
            lines.append(
                f'<text x="{to_x(value):.2f}" y="{bottom + 18}" text-anchor="{anchor}">{value:.4g}</text>'
            )
        for value in (min(ys), max(ys)):
            lines.append(
                f'<text x="{left - 5}" y="{to_y(value):.2f}" text-anchor="end">{value:.4g}</text>'
            )
        for k, (label, points) in enumerate(kept):
            color = SERIES_COLORS[k % len(SERIES_COLORS)]
            coords = " ".join(f"{to_x(x):.2f},{to_y(y):.2f}" for x, y in sorted(points))
            lines.append(f'<polyline fill="none" stroke="{color}" points="{coords}"/>')
            lines.append(
                f'<text x="{right - 5}" y="{top + 16 * (k + 1)}" text-anchor="end" '
                f'fill="{color}">{label}</text>'
            )
    lines.append("</svg>")
    return _atomic_write(path, "\n".join(lines) + "\n")


def write_field_csv(path: Path, field: ScalarField) -> Path:
    """Grid header row, its values, then one node value per row in row-major order."""
    grid = field.domain
    rows = [[FIELD_VALUES_HEADER]] + [[float(v)] for v in field.values.reshape(-1)]
    body = io.StringIO()
    writer = csv.writer(body, lineterminator="\n")
    writer.writerow(FIELD_HEADER.split(","))
    writer.writerow([grid.dim, format_cell(grid.half_width), grid.nodes_per_axis])
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return _atomic_write(path, body.getvalue())


def read_field_csv(path: Path, expected: GridDomain | None = None) -> ScalarField:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read field file {path}: {e}") from e
    rows = list(csv.reader(io.StringIO(text)))
    try:
        if ",".join(rows[0]) != FIELD_HEADER or rows[2] != [FIELD_VALUES_HEADER]:
            raise ValueError("unexpected header")
        dim, half_width, nodes = int(rows[1][0]), float(rows[1][1]), int(rows[1][2])
        values = np.array([float(row[0]) for row in rows[3:]])
    except (IndexError, ValueError) as e:
        raise ConfigError(f"malformed field file {path}: {e}") from e
    try:
        grid = make_grid(dim, half_width, nodes)
        if values.size != grid.node_count:
            raise ConfigError(
                f"malformed field file {path}: {values.size} values for {grid.node_count} nodes"
            )
        field = ScalarField(grid, values)
    except PreconditionError as e:
        raise ConfigError(f"malformed field file {path}: {e}") from e
    if expected is not None and grid != expected:
        raise GridMismatchError(f"field file {path} is on {grid}, expected {expected}")
    return field
