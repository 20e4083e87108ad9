"""Tensor-file exchange with the pipeline: float32 NPY v1.0, rank 3.

This is the entire interface to the unmixing pipeline on the tensor side;
the trainer never imports it. Files are written as C-ordered little-endian
float32 in format version 1.0 so byte output is deterministic, and read
back as float64 for checking, float32 for the network.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .exceptions import ValidationError

__all__ = ["read_tensor", "write_tensor", "probe_shape"]


def read_tensor(path) -> np.ndarray:
    """Load one rank-3 tensor; rejects non-float payloads and non-finite values."""
    try:
        arr = np.load(path, allow_pickle=False)
    except FileNotFoundError as exc:
        raise ValidationError(f"tensor file {path} does not exist") from exc
    except (ValueError, OSError) as exc:
        raise ValidationError(f"{path} is not a readable tensor file: {exc}") from exc
    if arr.dtype not in (np.float32, np.float64):
        raise ValidationError(f"{path} holds {arr.dtype}, expected float32/float64")
    if arr.ndim != 3:
        raise ValidationError(f"{path} has rank {arr.ndim}, expected 3")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{path} contains non-finite values")
    return np.asarray(arr, dtype=np.float32)


def write_tensor(arr: np.ndarray, path) -> None:
    """Write a rank-3 tensor in the canonical container layout."""
    out = np.ascontiguousarray(arr, dtype="<f4")
    if out.ndim != 3:
        raise ValidationError(f"refusing to write rank-{out.ndim} tensor to {path}")
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, out, version=(1, 0), allow_pickle=False)


def probe_shape(path) -> tuple[int, ...]:
    """Read only the header and return the declared shape.

    Lets the whole corpus be shape-checked against the manifest before any
    payload is loaded or any optimization step runs.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"tensor file {path} does not exist")
    try:
        with open(path, "rb") as fh:
            version = np.lib.format.read_magic(fh)
            if version == (1, 0):
                shape, _, dtype = np.lib.format.read_array_header_1_0(fh)
            elif version == (2, 0):
                shape, _, dtype = np.lib.format.read_array_header_2_0(fh)
            else:
                raise ValidationError(f"{path} uses NPY version {version}")
    except ValueError as exc:
        raise ValidationError(f"{path} has a malformed header: {exc}") from exc
    if dtype not in (np.dtype("<f4"), np.dtype("<f8")):
        raise ValidationError(f"{path} holds {dtype}, expected float32/float64")
    return shape
