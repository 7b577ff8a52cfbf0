"""Steady relativistic Boltzmann solver on the slab 0 <= x1 <= 1, with
hard-sphere collisions and weighted-norm diagnostics."""
from .errors import (
    ConfigError,
    ConvergenceError,
    DegeneratePairError,
    RatioUndefinedError,
    RbeSlabError,
    StateCorruptionError,
)

__version__ = "0.1.0"
