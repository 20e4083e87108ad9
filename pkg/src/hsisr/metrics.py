"""Quality metrics for cube pairs: PSNR, SAM, ERGAS, and patch aggregation.

Conventions, pinned because absolute comparability depends on them:
PSNR uses peak 1.0 on globally normalized data and is averaged over bands;
SAM is the mean per-pixel spectral angle in degrees, skipping pixels where
either spectrum has near-zero norm; ERGAS uses the 100 * (1 / scale) factor
with the per-band RMSE normalized by the reference band mean.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .cube import tensor_data
from .exceptions import DegenerateInputError, ShapeError
from .validation import check_rank, check_same_shape

__all__ = [
    "MetricsReport",
    "PatchReport",
    "PatchEvaluation",
    "psnr_per_band",
    "psnr",
    "sam",
    "sam_stats",
    "ergas",
    "evaluate_pair",
    "evaluate_patches",
]

NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class MetricsReport:
    """Scores for one (reference, estimate) pair."""

    mpsnr: float
    msam: float
    mergas: float
    per_band_psnr: tuple[float, ...]
    n_pixels_skipped_sam: int

    def to_dict(self) -> dict:
        return {
            "mpsnr": self.mpsnr,
            "msam": self.msam,
            "mergas": self.mergas,
            "per_band_psnr": list(self.per_band_psnr),
            "n_pixels_skipped_sam": self.n_pixels_skipped_sam,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            mpsnr=float(d["mpsnr"]),
            msam=float(d["msam"]),
            mergas=float(d["mergas"]),
            per_band_psnr=tuple(float(v) for v in d["per_band_psnr"]),
            n_pixels_skipped_sam=int(d["n_pixels_skipped_sam"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class PatchReport:
    """Scores for one patch, anchored at (row0, col0)."""

    row0: int
    col0: int
    report: MetricsReport


@dataclass(frozen=True)
class PatchEvaluation:
    """Per-patch reports plus arithmetic means over the patch grid."""

    patches: tuple[PatchReport, ...]
    patch_size: int
    grid: int
    scale: int
    mean_mpsnr: float
    mean_msam: float
    mean_mergas: float

    def to_dict(self) -> dict:
        return {
            "patch_size": self.patch_size,
            "grid": self.grid,
            "scale": self.scale,
            "mean_mpsnr": self.mean_mpsnr,
            "mean_msam": self.mean_msam,
            "mean_mergas": self.mean_mergas,
            "patches": [
                {"row0": p.row0, "col0": p.col0, **p.report.to_dict()}
                for p in self.patches
            ],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["patch", "row0", "col0", "mpsnr", "msam", "mergas",
                 "n_pixels_skipped_sam"]
            )
            for i, p in enumerate(self.patches):
                writer.writerow(
                    [i, p.row0, p.col0, repr(p.report.mpsnr), repr(p.report.msam),
                     repr(p.report.mergas), p.report.n_pixels_skipped_sam]
                )


def _pair(ref, est) -> tuple[np.ndarray, np.ndarray]:
    r = tensor_data(ref)
    e = tensor_data(est)
    check_rank(r, 3, "reference")
    check_rank(e, 3, "estimate")
    check_same_shape(r, e, "reference and estimate")
    return r, e


def psnr_per_band(ref, est, peak: float = 1.0) -> np.ndarray:
    """Per-band PSNR in dB; +inf where a band matches exactly."""
    r, e = _pair(ref, est)
    mse = np.mean((e - r) ** 2, axis=(1, 2))
    with np.errstate(divide="ignore"):
        return np.where(mse == 0.0, np.inf, 10.0 * np.log10(peak * peak / np.maximum(mse, 1e-300)))


def psnr(ref, est, peak: float = 1.0) -> float:
    """Mean over bands of the per-band PSNR. +inf iff the pair is exact."""
    return float(np.mean(psnr_per_band(ref, est, peak)))


def sam_stats(ref, est) -> tuple[float, int]:
    """Mean spectral angle in degrees and the count of skipped pixels.

    Pixels where either spectrum has norm below 1e-12 carry no angle and are
    skipped; the cosine is clamped to [-1, 1] so rounding never yields NaN.
    """
    r, e = _pair(ref, est)
    rm = r.reshape(r.shape[0], -1)
    em = e.reshape(e.shape[0], -1)
    dots = np.einsum("lp,lp->p", rm, em)
    nr = np.linalg.norm(rm, axis=0)
    ne = np.linalg.norm(em, axis=0)
    valid = (nr > NORM_FLOOR) & (ne > NORM_FLOOR)
    skipped = int(valid.size - valid.sum())
    if skipped == valid.size:
        raise DegenerateInputError("every pixel has near-zero norm; SAM undefined")
    cosang = np.clip(dots[valid] / (nr[valid] * ne[valid]), -1.0, 1.0)
    angles = np.degrees(np.arccos(cosang))
    return float(np.mean(angles)), skipped


def sam(ref, est) -> float:
    """Mean per-pixel spectral angle between two cubes, in degrees."""
    return sam_stats(ref, est)[0]


def ergas(ref, est, scale: int) -> float:
    """Dimensionless global relative error: 100/scale * RMS of per-band RMSE/mean."""
    r, e = _pair(ref, est)
    mu = np.mean(r, axis=(1, 2))
    tiny = np.abs(mu) <= NORM_FLOOR
    if np.any(tiny):
        band = int(np.argmax(tiny))
        raise DegenerateInputError(
            f"reference band {band} has near-zero mean ({mu[band]!r}); ERGAS undefined"
        )
    rmse = np.sqrt(np.mean((e - r) ** 2, axis=(1, 2)))
    return float(100.0 / scale * np.sqrt(np.mean((rmse / mu) ** 2)))


def evaluate_pair(ref, est, scale: int, peak: float = 1.0) -> MetricsReport:
    """All three metrics for one pair, bundled into a report."""
    per_band = psnr_per_band(ref, est, peak)
    msam, skipped = sam_stats(ref, est)
    return MetricsReport(
        mpsnr=float(np.mean(per_band)),
        msam=msam,
        mergas=ergas(ref, est, scale),
        per_band_psnr=tuple(float(v) for v in per_band),
        n_pixels_skipped_sam=skipped,
    )


def evaluate_patches(ref, est, patch_size: int = 76, grid: int = 4,
                     scale: int = 4, peak: float = 1.0) -> PatchEvaluation:
    """Score a grid x grid set of non-overlapping patches anchored top-left.

    Rows and columns beyond patch_size * grid are discarded. Means are plain
    arithmetic means of the per-patch mPSNR / mSAM / mERGAS.
    """
    r, e = _pair(ref, est)
    need = patch_size * grid
    if need > r.shape[1] or need > r.shape[2]:
        raise ShapeError(
            f"patch grid {grid}x{grid} of size {patch_size} needs {need} pixels, "
            f"image is {r.shape[1]}x{r.shape[2]}"
        )
    patches = []
    for pi in range(grid):
        for pj in range(grid):
            r0, c0 = pi * patch_size, pj * patch_size
            ref_crop = r[:, r0 : r0 + patch_size, c0 : c0 + patch_size]
            est_crop = e[:, r0 : r0 + patch_size, c0 : c0 + patch_size]
            patches.append(
                PatchReport(row0=r0, col0=c0,
                            report=evaluate_pair(ref_crop, est_crop, scale, peak))
            )
    return PatchEvaluation(
        patches=tuple(patches),
        patch_size=patch_size,
        grid=grid,
        scale=scale,
        mean_mpsnr=float(np.mean([p.report.mpsnr for p in patches])),
        mean_msam=float(np.mean([p.report.msam for p in patches])),
        mean_mergas=float(np.mean([p.report.mergas for p in patches])),
    )
