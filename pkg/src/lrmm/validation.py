"""Input validation helpers shared by every module.

All public entry points funnel array-likes through these checks, so the
numerical code below them can assume float64, correct rank, and finite
entries.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, NonFiniteError


def as_matrix(a, name: str = "a") -> np.ndarray:
    """Coerce ``a`` to a finite 2-d float64 array.

    Raises
    ------
    DimensionError
        If the input is not two-dimensional or has a zero-length axis.
    NonFiniteError
        If any entry is NaN or infinite.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def as_observations(x, name: str = "observations") -> np.ndarray:
    """Coerce ``x`` to a finite 3-d float64 sample stack of shape (n, d1, d2)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise DimensionError(f"{name} must be a 3-d stack, got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def check_rank(r: int, d1: int, d2: int, name: str = "r") -> int:
    """Validate a target rank against matrix dimensions d1 x d2."""
    r = int(r)
    if r < 1:
        raise DimensionError(f"{name} must be >= 1, got {r}")
    if r > min(d1, d2):
        raise DimensionError(f"{name}={r} exceeds min(d1, d2)={min(d1, d2)}")
    return r


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DimensionError(f"{name} must be a positive finite number, got {value}")
    return value


def check_seed(seed, name: str = "seed") -> int:
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise DimensionError(f"{name} must fit in an unsigned 64-bit integer")
    return seed
