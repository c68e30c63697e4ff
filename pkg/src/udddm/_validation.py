"""Small argument checks shared across modules.

All of them raise ``ValueError`` (or ``IndexError`` for step indices) so
callers composing with scikit-learn see the usual exception types.
"""

from __future__ import annotations

import numbers

import numpy as np


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value}")
    return value


def check_open_unit(value, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_step(t, T: int) -> int:
    if isinstance(t, bool) or not isinstance(t, numbers.Integral):
        raise IndexError(f"step index must be an integer, got {t!r}")
    if not 1 <= t <= T:
        raise IndexError(f"step index {t} outside 1..{T}")
    return int(t)


def check_steps(t, T: int) -> np.ndarray:
    """Vector form of :func:`check_step`; returns an int64 array."""
    arr = np.asarray(t)
    if arr.dtype.kind not in "iu":
        raise IndexError(f"step indices must be integers, got dtype {arr.dtype}")
    if arr.size and (arr.min() < 1 or arr.max() > T):
        raise IndexError(f"step indices outside 1..{T}")
    return arr.astype(np.int64)


def as_matrix(x, name: str, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a float64 array of shape (n, dim); 1-D input becomes one row."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"{name} has {arr.shape[1]} columns, expected {dim}")
    return arr


def check_same_shape(x: np.ndarray, y: np.ndarray, names: str = "inputs") -> None:
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch between {names}: {x.shape} vs {y.shape}")
