"""Core tensor types and their on-disk exchange format.

Axis order is fixed everywhere: 3-D tensors are (band | material, row, col)
and endmember matrices are (band, material). Arithmetic runs in float64;
files carry float32 payloads in the NPY v1.0 container (little-endian,
C-contiguous), which is what the external training process reads and writes.
The writer always emits that canonical form, so equal tensors produce equal
bytes; the reader additionally accepts float64 payloads and widens them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.lib.format as npy_format

from .exceptions import (
    DataError,
    DegenerateInputError,
    FormatError,
    IoError,
    ShapeError,
)
from .validation import check_rank, frozen_float64

__all__ = [
    "HsiCube",
    "AbundanceMaps",
    "EndmemberMatrix",
    "load_tensor",
    "save_tensor",
    "normalize_global",
    "tensor_data",
]

SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class HsiCube:
    """Hyperspectral cube of shape (bands, rows, cols).

    Values are finite float64 and the backing array is read-only, so cubes
    can be shared freely across threads.
    """

    data: np.ndarray
    wavelength_note: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.data)
        check_rank(arr, 3, "HsiCube")
        object.__setattr__(self, "data", frozen_float64(self.data, "HsiCube"))

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]

    def as_matrix(self) -> np.ndarray:
        """View the cube as a (bands, pixels) matrix, pixels in row-major order."""
        return self.data.reshape(self.bands, -1)

    def save(self, path) -> None:
        save_tensor(self, path)

    @classmethod
    def load(cls, path) -> "HsiCube":
        return load_tensor(path, kind="cube")


@dataclass(frozen=True)
class AbundanceMaps:
    """Per-material abundance maps of shape (materials, rows, cols).

    With ``simplex=True`` every pixel vector is checked to be entrywise
    >= -1e-6 and to sum to 1 within 1e-6.
    """

    data: np.ndarray
    simplex: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data)
        check_rank(arr, 3, "AbundanceMaps")
        frozen = frozen_float64(self.data, "AbundanceMaps")
        object.__setattr__(self, "data", frozen)
        if self.simplex:
            if frozen.min() < -SIMPLEX_TOL:
                raise DataError(
                    f"simplex abundance below -{SIMPLEX_TOL}: min {frozen.min()!r}"
                )
            sums = frozen.sum(axis=0)
            err = float(np.abs(sums - 1.0).max())
            if err > SIMPLEX_TOL:
                raise DataError(
                    f"simplex abundance sums deviate from 1 by {err!r} > {SIMPLEX_TOL}"
                )

    @property
    def materials(self) -> int:
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]

    def as_matrix(self) -> np.ndarray:
        """View the maps as a (materials, pixels) matrix."""
        return self.data.reshape(self.materials, -1)

    def save(self, path) -> None:
        save_tensor(self, path)

    @classmethod
    def load(cls, path) -> "AbundanceMaps":
        return load_tensor(path, kind="abundance")


@dataclass(frozen=True)
class EndmemberMatrix:
    """Endmember spectra of shape (bands, materials): column n is material n."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        check_rank(arr, 2, "EndmemberMatrix")
        frozen = frozen_float64(self.data, "EndmemberMatrix")
        object.__setattr__(self, "data", frozen)
        norms = np.linalg.norm(frozen, axis=0)
        if np.any(norms == 0.0):
            dead = int(np.argmin(norms))
            raise DataError(f"endmember column {dead} is all-zero")

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def materials(self) -> int:
        return self.data.shape[1]

    def column(self, n: int) -> np.ndarray:
        return self.data[:, n]

    def save(self, path) -> None:
        save_tensor(self, path)

    @classmethod
    def load(cls, path) -> "EndmemberMatrix":
        return load_tensor(path, kind="endmembers")


def tensor_data(t) -> np.ndarray:
    """Raw ndarray behind a tensor type; ndarrays pass through validated."""
    if isinstance(t, (HsiCube, AbundanceMaps, EndmemberMatrix)):
        return t.data
    return np.asarray(t, dtype=np.float64)


def save_tensor(t, path) -> None:
    """Write a tensor as a canonical float32 NPY v1.0 file.

    Output bytes are a deterministic function of the tensor values and
    shape, so re-running a pipeline stage reproduces files bit for bit.
    """
    arr = np.ascontiguousarray(tensor_data(t), dtype="<f4")
    try:
        with open(path, "wb") as fh:
            npy_format.write_array(fh, arr, version=(1, 0), allow_pickle=False)
    except OSError as exc:
        raise IoError(f"cannot write tensor to {path}: {exc}") from exc


def load_tensor(path, kind: str = "auto"):
    """Load a tensor container file.

    ``kind`` selects the wrapper type: "cube", "abundance", "endmembers",
    or "auto" (rank 3 -> :class:`HsiCube`, rank 2 -> :class:`EndmemberMatrix`;
    only the endmember matrix is 2-D in this pipeline). float32 payloads are
    widened losslessly to float64; float64 payloads are accepted as-is.
    """
    try:
        with open(path, "rb") as fh:
            arr = np.load(fh, allow_pickle=False)
    except OSError as exc:
        raise IoError(f"cannot read tensor from {path}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"{path} is not a valid tensor container: {exc}") from exc

    if arr.dtype.kind != "f" or arr.dtype.itemsize not in (4, 8):
        raise FormatError(
            f"{path}: unsupported element type {arr.dtype}, expected 4- or 8-byte floats"
        )
    if arr.ndim not in (2, 3):
        raise ShapeError(f"{path}: tensor rank must be 2 or 3, got {arr.ndim}")
    if not np.isfinite(arr).all():
        raise DataError(f"{path}: payload contains non-finite elements")
    arr = arr.astype(np.float64)

    if kind == "auto":
        kind = "endmembers" if arr.ndim == 2 else "cube"
    if kind == "cube":
        if arr.ndim != 3:
            raise ShapeError(f"{path}: expected a rank-3 cube, got rank {arr.ndim}")
        return HsiCube(arr)
    if kind == "abundance":
        if arr.ndim != 3:
            raise ShapeError(f"{path}: expected rank-3 abundances, got rank {arr.ndim}")
        return AbundanceMaps(arr)
    if kind == "endmembers":
        if arr.ndim != 2:
            raise ShapeError(
                f"{path}: expected a rank-2 endmember matrix, got rank {arr.ndim}"
            )
        return EndmemberMatrix(arr)
    raise ValueError(f"unknown tensor kind {kind!r}")


def _like(template, data):
    if isinstance(template, HsiCube):
        return HsiCube(data, template.wavelength_note)
    if isinstance(template, AbundanceMaps):
        return AbundanceMaps(data)
    if isinstance(template, EndmemberMatrix):
        return EndmemberMatrix(data)
    return np.asarray(data, dtype=np.float64)


def normalize_global(c):
    """Divide by the global maximum so the largest value becomes exactly 1.

    Preserves the relative order of all values; idempotent and invariant to
    positive rescaling of the input. This establishes the [0, 1] range the
    PSNR peak convention assumes.
    """
    data = tensor_data(c)
    peak = float(data.max())
    if peak <= 0.0:
        raise DegenerateInputError(
            f"cannot normalize: global maximum is {peak}, expected > 0"
        )
    return _like(c, data / peak)
