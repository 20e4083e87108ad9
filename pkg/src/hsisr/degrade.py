"""Simulated acquisition: Gaussian blur, bicubic resampling, and their composition.

The blur is a separable discrete Gaussian, truncated at a configurable
number of standard deviations and renormalized to sum 1, applied per
channel. Resampling uses the Keys cubic-convolution kernel with parameter
a = -0.5 under the half-pixel center-alignment convention: output sample i
reads the input at continuous position (i + 0.5) * ratio - 0.5. Both
conventions are pinned here bit-exactly so an external training process can
reproduce them.

Boundary modes: "reflect" mirrors with the edge sample duplicated
(numpy.pad "symmetric"); "replicate" clamps to the edge sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from .cube import _like, tensor_data
from .exceptions import ConfigError, KernelTooLargeError, ShapeError
from .validation import check_rank

__all__ = [
    "PsfConfig",
    "gaussian_kernel",
    "gaussian_blur",
    "downsample_bicubic",
    "upsample_bicubic",
    "degrade",
    "PsfDegrader",
]

BOUNDARY_MODES = ("reflect", "replicate")
_SCIPY_MODE = {"reflect": "reflect", "replicate": "nearest"}
KEYS_A = -0.5


@dataclass(frozen=True)
class PsfConfig:
    """Point-spread-function parameters for the degradation operator."""

    sigma: float = 4.0
    truncation_radius_sigmas: float = 3.0
    scale: int = 4
    boundary: str = "reflect"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.truncation_radius_sigmas <= 0:
            raise ConfigError(
                f"truncation_radius_sigmas must be > 0, got {self.truncation_radius_sigmas}"
            )
        if int(self.scale) != self.scale or self.scale < 2:
            raise ConfigError(f"scale must be an integer >= 2, got {self.scale}")
        object.__setattr__(self, "scale", int(self.scale))
        if self.boundary not in BOUNDARY_MODES:
            raise ConfigError(
                f"boundary must be one of {BOUNDARY_MODES}, got {self.boundary!r}"
            )

    @property
    def kernel_radius(self) -> int:
        """Half-width in samples; total support is 2 * radius + 1 taps."""
        return int(math.ceil(self.truncation_radius_sigmas * self.sigma))


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """Discrete Gaussian taps on [-radius, radius], renormalized to sum 1."""
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return g / g.sum()


def _spatial(t) -> np.ndarray:
    arr = tensor_data(t)
    check_rank(arr, 3, "tensor")
    return arr


def gaussian_blur(t, cfg: PsfConfig):
    """Convolve each channel with the separable truncated Gaussian.

    Shape is unchanged; a constant input is preserved because the kernel is
    normalized. The kernel must fit strictly inside twice the image extent.
    """
    arr = _spatial(t)
    kernel = gaussian_kernel(cfg.sigma, cfg.kernel_radius)
    size = kernel.size
    _, rows, cols = arr.shape
    if size >= 2 * rows or size >= 2 * cols:
        raise KernelTooLargeError(
            f"kernel of {size} taps does not fit strictly inside twice the "
            f"{rows}x{cols} image extent"
        )
    mode = _SCIPY_MODE[cfg.boundary]
    out = ndimage.convolve1d(arr, kernel, axis=1, mode=mode)
    out = ndimage.convolve1d(out, kernel, axis=2, mode=mode)
    return _like(t, out)


def _keys_kernel(x: np.ndarray, a: float = KEYS_A) -> np.ndarray:
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    near = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    far = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))


def _reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    idx = np.mod(idx, 2 * n)
    return np.where(idx >= n, 2 * n - 1 - idx, idx)


def _resample_last_axis(arr: np.ndarray, out_len: int, ratio: float, boundary: str) -> np.ndarray:
    """Cubic-convolution resampling along the last axis.

    Output sample i interpolates the input at (i + 0.5) * ratio - 0.5 using
    the four nearest taps.
    """
    n = arr.shape[-1]
    pos = (np.arange(out_len, dtype=np.float64) + 0.5) * ratio - 0.5
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    out = np.zeros(arr.shape[:-1] + (out_len,), dtype=np.float64)
    for k in range(-1, 3):
        idx = base + k
        if boundary == "replicate":
            idx = np.clip(idx, 0, n - 1)
        else:
            idx = _reflect_indices(idx, n)
        out += arr[..., idx] * _keys_kernel(frac - k)
    return out


def _resample_spatial(arr: np.ndarray, out_rows: int, out_cols: int, ratio: float, boundary: str) -> np.ndarray:
    out = _resample_last_axis(arr, out_cols, ratio, boundary)
    out = np.moveaxis(out, 1, 2)
    out = _resample_last_axis(out, out_rows, ratio, boundary)
    return np.ascontiguousarray(np.moveaxis(out, 1, 2))


def downsample_bicubic(t, cfg: PsfConfig):
    """Bicubic decimation by ``cfg.scale``; output dims are ceil(dim / scale)."""
    arr = _spatial(t)
    _, rows, cols = arr.shape
    out_rows = -(-rows // cfg.scale)
    out_cols = -(-cols // cfg.scale)
    if out_rows < 1 or out_cols < 1:
        raise ShapeError(f"downsampled size {out_rows}x{out_cols} is empty")
    out = _resample_spatial(arr, out_rows, out_cols, float(cfg.scale), cfg.boundary)
    return _like(t, out)


def upsample_bicubic(t, scale: int, target_dims: tuple[int, int] | None = None,
                     boundary: str = "reflect"):
    """Bicubic upsampling by ``scale`` under the same alignment convention.

    ``target_dims`` may trim up to scale - 1 samples per dimension relative
    to rows * scale (the non-multiple remainder of the original grid).
    """
    arr = _spatial(t)
    if boundary not in BOUNDARY_MODES:
        raise ConfigError(f"boundary must be one of {BOUNDARY_MODES}, got {boundary!r}")
    _, rows, cols = arr.shape
    full = (rows * scale, cols * scale)
    if target_dims is None:
        target_dims = full
    for got, nominal in zip(target_dims, full):
        if got < 1 or abs(got - nominal) > scale - 1:
            raise ShapeError(
                f"target dims {target_dims} inconsistent with scale {scale} "
                f"(nominal {full}, allowed slack {scale - 1})"
            )
    out = _resample_spatial(arr, target_dims[0], target_dims[1], 1.0 / scale, boundary)
    return _like(t, out)


def degrade(t, cfg: PsfConfig):
    """The acquisition operator: Gaussian blur followed by bicubic decimation.

    Linear and channel-wise, so it commutes with the linear mixing model:
    degrading a mixed cube equals mixing degraded abundances.
    """
    return downsample_bicubic(gaussian_blur(t, cfg), cfg)


class PsfDegrader(BaseEstimator, TransformerMixin):
    """Stateless transformer applying the blur + decimation operator."""

    def __init__(self, sigma: float = 4.0, truncation_radius_sigmas: float = 3.0,
                 scale: int = 4, boundary: str = "reflect"):
        self.sigma = sigma
        self.truncation_radius_sigmas = truncation_radius_sigmas
        self.scale = scale
        self.boundary = boundary

    def _config(self) -> PsfConfig:
        return PsfConfig(
            sigma=self.sigma,
            truncation_radius_sigmas=self.truncation_radius_sigmas,
            scale=self.scale,
            boundary=self.boundary,
        )

    def fit(self, X, y=None):
        self._config()
        return self

    def transform(self, X):
        return degrade(X, self._config())
