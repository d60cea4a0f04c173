"""Tests for fblab/artifacts.py - CSV, JSON, SVG and field files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from fblab.artifacts import (
    Series,
    format_cell,
    read_field_csv,
    write_csv,
    write_field_csv,
    write_json,
    write_svg_line_chart,
)
from fblab.exceptions import ConfigError, GridMismatchError
from fblab.grid_field import make_grid, sample


class TestFormatCell:
    """Tests for format_cell."""

    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            (None, ""),
            (True, "true"),
            (np.bool_(False), "false"),
            (0.1, "0.1"),
            (np.float64(2.5), "2.5"),
            (3, "3"),
            (np.int64(7), "7"),
            ([0.0, 0.5], "0.0 0.5"),
            (np.array([1.0, -1.0]), "1.0 -1.0"),
            ("Theta", "Theta"),
        ],
    )
    def test_values(self, value, expected):
        assert format_cell(value) == expected


class TestWriteCsv:
    """Tests for write_csv and write_json."""

    def test_writes_rows(self, tmp_dir: Path):
        path = write_csv(tmp_dir / "nested" / "t.csv", ["a", "b"], [[1, 0.5], [None, True]])
        assert path.read_text() == "a,b\n1,0.5\n,true\n"

    def test_rejects_short_row(self, tmp_dir: Path):
        with pytest.raises(ValueError, match="cells"):
            write_csv(tmp_dir / "t.csv", ["a", "b"], [[1]])
        assert not (tmp_dir / "t.csv").exists()

    def test_no_temporary_files_left(self, tmp_dir: Path):
        write_csv(tmp_dir / "t.csv", ["a"], [[1]])
        write_json(tmp_dir / "t.json", {"b": 1, "a": [1.5]})
        assert sorted(p.name for p in tmp_dir.iterdir()) == ["t.csv", "t.json"]

    def test_json_sorted(self, tmp_dir: Path):
        path = write_json(tmp_dir / "t.json", {"b": 1, "a": None})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": None, "b": 1}


class TestSvgChart:
    """Tests for write_svg_line_chart."""

    def test_series_and_labels(self, tmp_dir: Path):
        path = write_svg_line_chart(
            tmp_dir / "c.svg",
            [Series("exact", [0.1, 0.2, 0.4], [1e-4, 4e-4, 1.6e-3]), Series("solved", [0.1], [float("nan")])],
            title="gap",
            x_label="theta",
            y_label="value",
            log_x=True,
            log_y=True,
        )
        text = path.read_text()
        assert text.startswith("<svg")
        assert text.rstrip().endswith("</svg>")
        assert text.count("<polyline") == 2
        assert ">exact<" in text
        assert ">theta<" in text

    def test_log_axis_drops_nonpositive(self, tmp_dir: Path):
        path = write_svg_line_chart(
            tmp_dir / "c.svg",
            [Series("s", [1.0, 2.0], [0.0, -1.0])],
            title="t",
            x_label="x",
            y_label="y",
            log_y=True,
        )
        assert "<polyline" not in path.read_text()


class TestFieldFiles:
    """Tests for write_field_csv and read_field_csv."""

    def test_round_trip(self, tmp_dir: Path):
        grid = make_grid(2, 1.0, 8)
        field = sample(lambda p: p[..., 0] ** 2 + 0.1 * p[..., 1], grid, vectorized=True)
        path = write_field_csv(tmp_dir / "f.csv", field)
        loaded = read_field_csv(path, grid)
        assert loaded.domain == grid
        assert np.array_equal(loaded.values, field.values)

    def test_header(self, tmp_dir: Path):
        grid = make_grid(1, 2.0, 8)
        path = write_field_csv(tmp_dir / "f.csv", sample(lambda p: 1.0, grid))
        lines = path.read_text().splitlines()
        assert lines[:3] == ["dim,half_width,nodes_per_axis", "1,2.0,8", "value"]
        assert len(lines) == 3 + 9

    def test_grid_mismatch(self, tmp_dir: Path):
        grid = make_grid(1, 1.0, 8)
        path = write_field_csv(tmp_dir / "f.csv", sample(lambda p: 1.0, grid))
        with pytest.raises(GridMismatchError):
            read_field_csv(path, make_grid(1, 1.0, 16))

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "x,y,z\n1,1.0,8\nvalue\n",
            "dim,half_width,nodes_per_axis\n1,1.0,8\nvalue\n1.0\n",
            "dim,half_width,nodes_per_axis\n1,1.0,2\nvalue\n1.0\n1.0\n1.0\n",
            "dim,half_width,nodes_per_axis\n1,1.0,8\nvalue\n" + "abc\n" * 9,
        ],
    )
    def test_malformed(self, tmp_dir: Path, text):
        path = tmp_dir / "f.csv"
        path.write_text(text)
        with pytest.raises(ConfigError, match="malformed"):
            read_field_csv(path)

    def test_missing_file(self, tmp_dir: Path):
        with pytest.raises(ConfigError, match="cannot read"):
            read_field_csv(tmp_dir / "absent.csv")
