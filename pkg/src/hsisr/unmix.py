"""Linear unmixing: endmember extraction and least-squares abundances.

Endmembers are found by successive projection: repeatedly pick the pixel
spectrum with the largest residual norm, then project the residual onto the
orthogonal complement of the chosen spectrum. The returned matrix contains
exact pixel spectra from the input (selection, never averaging), so under
the pure-pixel assumption the extraction is exact. Abundances come from an
unconstrained per-pixel least-squares solve against the endmember matrix,
optionally clipped to be non-negative afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .cube import AbundanceMaps, EndmemberMatrix, HsiCube
from .exceptions import ConfigError, RankDeficientError, ShapeError, SingularSystemError

__all__ = [
    "UnmixConfig",
    "extract_endmember_indices",
    "extract_endmembers",
    "estimate_abundances",
    "reconstruct",
    "LinearUnmixer",
]

RESIDUAL_NORM_FLOOR = 1e-12
CONDITION_LIMIT = 1e10


@dataclass(frozen=True)
class UnmixConfig:
    """Unmixing parameters. The algorithm is deterministic (no seed)."""

    n_materials: int
    nonneg_clip: bool = False

    def __post_init__(self):
        if self.n_materials < 1:
            raise ConfigError(f"n_materials must be >= 1, got {self.n_materials}")


def _as_cube(x) -> HsiCube:
    if isinstance(x, HsiCube):
        return x
    if isinstance(x, AbundanceMaps):
        return HsiCube(x.data)
    return HsiCube(np.asarray(x, dtype=np.float64))


def _as_endmembers(s) -> EndmemberMatrix:
    if isinstance(s, EndmemberMatrix):
        return s
    return EndmemberMatrix(np.asarray(s, dtype=np.float64))


def extract_endmember_indices(cube, cfg: UnmixConfig) -> np.ndarray:
    """Pixel indices (into the row-major pixel enumeration) chosen as endmembers.

    Ties in the residual-norm argmax are broken toward the lowest pixel
    index, which makes the selection deterministic across platforms.
    """
    cube = _as_cube(cube)
    n = cfg.n_materials
    if n > cube.bands:
        raise ConfigError(
            f"n_materials ({n}) cannot exceed the number of bands ({cube.bands})"
        )
    m = cube.as_matrix()
    residual = m.copy()
    chosen = np.empty(n, dtype=np.int64)
    for k in range(n):
        norms2 = np.einsum("lp,lp->p", residual, residual)
        j = int(np.argmax(norms2))
        norm = float(np.sqrt(norms2[j]))
        if norm < RESIDUAL_NORM_FLOOR:
            raise RankDeficientError(
                f"residual norm {norm:.3e} below {RESIDUAL_NORM_FLOOR} after "
                f"{k} of {n} endmembers; input spectra span too few dimensions"
            )
        u = residual[:, j] / norm
        residual -= np.outer(u, u @ residual)
        residual[:, j] = 0.0
        chosen[k] = j
    return chosen


def extract_endmembers(cube, cfg: UnmixConfig) -> EndmemberMatrix:
    """Extract ``cfg.n_materials`` endmember spectra from the cube's pixels."""
    cube = _as_cube(cube)
    idx = extract_endmember_indices(cube, cfg)
    return EndmemberMatrix(cube.as_matrix()[:, idx])


def estimate_abundances(cube, endmembers, cfg: UnmixConfig | None = None) -> AbundanceMaps:
    """Per-pixel least-squares abundances for a cube given endmember spectra.

    Solves min ||m_p - S a_p||_2 for every pixel via an orthogonal (SVD)
    decomposition of S; the residual is the orthogonal projection residual.
    With ``cfg.nonneg_clip`` negative coefficients are zeroed after the solve.
    """
    cube = _as_cube(cube)
    s = _as_endmembers(endmembers)
    if s.bands != cube.bands:
        raise ShapeError(
            f"endmember matrix has {s.bands} bands but cube has {cube.bands}"
        )
    cond = float(np.linalg.cond(s.data))
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise SingularSystemError(
            f"endmember matrix condition number {cond:.3e} >= {CONDITION_LIMIT:.0e}"
        )
    coeffs, _, _, _ = np.linalg.lstsq(s.data, cube.as_matrix(), rcond=None)
    if cfg is not None and cfg.nonneg_clip:
        coeffs = np.maximum(coeffs, 0.0)
    return AbundanceMaps(coeffs.reshape(s.materials, cube.rows, cube.cols))


def reconstruct(endmembers, abundances) -> HsiCube:
    """Mix abundances back into a cube: cube(l,i,j) = sum_n S(l,n) A(n,i,j)."""
    s = _as_endmembers(endmembers)
    a = abundances if isinstance(abundances, AbundanceMaps) else AbundanceMaps(
        np.asarray(abundances, dtype=np.float64)
    )
    if s.materials != a.materials:
        raise ShapeError(
            f"endmember matrix has {s.materials} materials but abundances have "
            f"{a.materials}"
        )
    return HsiCube(np.tensordot(s.data, a.data, axes=(1, 0)))


class LinearUnmixer(BaseEstimator, TransformerMixin):
    """Estimator wrapping the unmixing pipeline.

    ``fit`` extracts the endmember matrix from a cube, ``transform`` maps a
    cube to abundance maps, and ``inverse_transform`` mixes abundances back
    into a cube. Accepts :class:`HsiCube` or raw (bands, rows, cols) arrays;
    returns plain arrays, with the fitted matrix under ``endmembers_``.
    """

    def __init__(self, n_materials: int = 6, nonneg_clip: bool = False):
        self.n_materials = n_materials
        self.nonneg_clip = nonneg_clip

    def _config(self) -> UnmixConfig:
        return UnmixConfig(n_materials=self.n_materials, nonneg_clip=self.nonneg_clip)

    def fit(self, X, y=None):
        cfg = self._config()
        cube = _as_cube(X)
        self.selected_indices_ = extract_endmember_indices(cube, cfg)
        self.endmembers_ = cube.as_matrix()[:, self.selected_indices_].copy()
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        return estimate_abundances(X, self.endmembers_, self._config()).data

    def inverse_transform(self, A) -> np.ndarray:
        self._check_fitted()
        return reconstruct(self.endmembers_, A).data

    def _check_fitted(self):
        if not hasattr(self, "endmembers_"):
            raise NotFittedError("LinearUnmixer is not fitted; call fit() first")
