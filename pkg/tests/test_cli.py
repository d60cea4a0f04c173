"""Tests for fblab/cli.py - CLI integration tests using Click's CliRunner."""

from __future__ import annotations

import json
import logging
import math
import sys
from pathlib import Path

import pytest
from click.testing import CliRunner
from fblab.cli import cli, setup_logging

EXPERIMENT_COMMANDS = ["exact-validate", "monotonicity-audit", "theta-sweep", "curvature-sweep"]


@pytest.fixture
def runner() -> CliRunner:
    """Create a Click CLI test runner."""
    return CliRunner()


class TestCliHelp:
    """Tests for CLI help output."""

    def test_main_help(self, runner: CliRunner):
        """Main --help shows all commands."""
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for name in [*EXPERIMENT_COMMANDS, "show-config"]:
            assert name in result.output

    def test_main_help_shows_description(self, runner: CliRunner):
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        assert "fblab" in result.output

    @pytest.mark.parametrize("command", EXPERIMENT_COMMANDS)
    def test_experiment_help(self, runner: CliRunner, command):
        """Every experiment takes --config and --out."""
        result = runner.invoke(cli, [command, "--help"])
        assert result.exit_code == 0
        assert "--config" in result.output
        assert "--out" in result.output

    def test_show_config_help(self, runner: CliRunner):
        result = runner.invoke(cli, ["show-config", "--help"])
        assert result.exit_code == 0
        assert "--config" in result.output
        assert "--out" not in result.output


class TestCliVersion:
    """Tests for CLI version output."""

    def test_version_flag(self, runner: CliRunner):
        """--version shows version information."""
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "fblab" in result.output.lower()
        assert "0." in result.output or "1." in result.output


class TestCliDebugFlag:
    """Tests for --debug flag."""

    def test_debug_flag_accepted(self, runner: CliRunner):
        result = runner.invoke(cli, ["--debug", "--help"])
        assert result.exit_code == 0

    def test_debug_short_flag_accepted(self, runner: CliRunner):
        result = runner.invoke(cli, ["-d", "--help"])
        assert result.exit_code == 0


class TestShowConfig:
    """Tests for show-config."""

    def test_prints_sorted_json(self, runner: CliRunner, config_file):
        result = runner.invoke(cli, ["show-config", "--config", str(config_file())])
        assert result.exit_code == 0
        shown = json.loads(result.output)
        assert shown["experiment"] == "exact-validate"
        assert shown["theta_list"] == [pytest.approx(math.pi / 3)]
        assert list(shown) == sorted(shown)

    def test_invalid_config(self, runner: CliRunner, config_file):
        result = runner.invoke(cli, ["show-config", "--config", str(config_file(dim="two"))])
        assert result.exit_code == 2
        assert "ERROR:" in result.output
        assert "dim" in result.output


class TestCliExitCodes:
    """Tests for error reporting and exit codes."""

    def test_missing_config_file(self, runner: CliRunner, tmp_dir: Path):
        """click rejects a config path that does not exist."""
        result = runner.invoke(
            cli, ["exact-validate", "--config", str(tmp_dir / "absent.toml"), "--out", str(tmp_dir)]
        )
        assert result.exit_code == 2

    def test_experiment_mismatch(self, runner: CliRunner, config_file, tmp_dir: Path):
        """A config for one experiment cannot run another."""
        result = runner.invoke(
            cli, ["theta-sweep", "--config", str(config_file()), "--out", str(tmp_dir / "out")]
        )
        assert result.exit_code == 2
        assert "not theta-sweep" in result.output
        assert not (tmp_dir / "out").exists()

    def test_precondition_failure(self, runner: CliRunner, config_file, tmp_dir: Path):
        """Numerical preconditions exit with 3 before anything is written."""
        path = config_file(radii_list=[0.2, 0.5])
        result = runner.invoke(cli, ["exact-validate", "--config", str(path), "--out", str(tmp_dir / "out")])
        assert result.exit_code == 3
        assert "ERROR:" in result.output
        assert not (tmp_dir / "out").exists()

    def test_exact_validate_runs(self, runner: CliRunner, config_file, tmp_dir: Path):
        out = tmp_dir / "out"
        result = runner.invoke(cli, ["exact-validate", "--config", str(config_file()), "--out", str(out)])
        assert result.exit_code == 0
        assert "exact-validate:" in result.output
        assert (out / "summary.json").exists()


class TestCliLogging:
    """Tests for logging setup."""

    def test_setup_logging_no_duplicate_handlers(self):
        """Repeated setup_logging calls do not add duplicate stderr handlers."""
        logger = logging.getLogger("fblab")
        original_handlers = list(logger.handlers)
        try:
            for handler in list(logger.handlers):
                logger.removeHandler(handler)

            setup_logging(debug=False)
            setup_logging(debug=True)

            stderr_handlers = [
                h
                for h in logger.handlers
                if isinstance(h, logging.StreamHandler) and getattr(h, "stream", None) is sys.stderr
            ]
            assert len(stderr_handlers) == 1
            assert logger.level == logging.DEBUG
        finally:
            for handler in list(logger.handlers):
                logger.removeHandler(handler)
            for handler in original_handlers:
                logger.addHandler(handler)
