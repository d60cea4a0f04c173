"""
fblab - numerical laboratory for one-phase Bernoulli and small-angle capillary minimizers.

Computes density ratios, Weiss energies and their cutoff-regularized versions on
grid fields, and checks convergence, monotonicity and curvature claims against
half-plane model solutions.
"""

from __future__ import annotations

from .cli import main
from .exceptions import ConfigError, FbLabError, PreconditionError, UserError

__all__ = [
    "ConfigError",
    "FbLabError",
    "PreconditionError",
    "UserError",
    "main",
]
