"""Truncated conformally-flat 2-disk operad algebra on the Bergman space,
with an independent free-boson vertex algebra for cross-validation."""

from . import bergman, cocycle, diskmap, errors, fock, heisenberg, series

__all__ = ["bergman", "cocycle", "diskmap", "errors", "fock", "heisenberg", "series"]
__version__ = "0.1.0"
