"""Input validation helpers shared by the tensor types and estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import DataError, ShapeError

__all__ = ["check_finite", "check_rank", "check_same_shape", "frozen_float64"]


def check_rank(arr: np.ndarray, rank: int, name: str = "tensor") -> None:
    if arr.ndim != rank:
        raise ShapeError(f"{name} must have rank {rank}, got rank {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ShapeError(f"{name} has an empty dimension: shape {arr.shape}")


def check_finite(arr: np.ndarray, name: str = "tensor") -> None:
    if not np.isfinite(arr).all():
        bad = int(np.size(arr) - np.isfinite(arr).sum())
        raise DataError(f"{name} contains {bad} non-finite element(s)")


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "tensors") -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what} must have equal shapes, got {a.shape} vs {b.shape}")


def frozen_float64(data, name: str = "tensor") -> np.ndarray:
    """Return ``data`` as a read-only C-contiguous float64 array.

    The caller's array is never mutated: a copy is made whenever the input
    is a writable array that numpy would otherwise pass through unchanged.
    Already-frozen arrays are shared, which keeps tensor wrappers cheap.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr is data and arr.flags.writeable:
        arr = arr.copy()
    arr = np.ascontiguousarray(arr)
    check_finite(arr, name)
    arr.setflags(write=False)
    return arr
