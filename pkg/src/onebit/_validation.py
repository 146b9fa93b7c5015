"""Input checks shared by the estimator classes and the CLI."""

from __future__ import annotations

import math
import numbers

import numpy as np
from sklearn.utils import check_array


def check_samples(X, name: str = "X") -> np.ndarray:
    """Return a 1-d float array of finite samples.

    Accepts a sequence, a 1-d array, or an ``(n, 1)`` column.
    """
    arr = check_array(
        X, ensure_2d=False, dtype=np.float64, ensure_all_finite=True, input_name=name
    )
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{name} must be 1-d or a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got {arr.ndim} dimensions")
    if arr.size == 0:
        raise ValueError(f"{name} contains no samples")
    return arr


def check_positive(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_count(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
