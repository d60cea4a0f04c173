"""fblab command implementations."""

from __future__ import annotations

from .curvature_sweep import cmd_curvature_sweep
from .exact_validate import cmd_exact_validate
from .monotonicity_audit import cmd_monotonicity_audit
from .show_config import cmd_show_config
from .theta_sweep import cmd_theta_sweep

__all__ = [
    "cmd_curvature_sweep",
    "cmd_exact_validate",
    "cmd_monotonicity_audit",
    "cmd_show_config",
    "cmd_theta_sweep",
]
