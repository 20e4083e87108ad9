"""Pair corpus access: manifest parsing, shape validation, crop sampling.

The corpus directory is the one the pipeline's `synth` stage writes: a
manifest.json listing HR/LR tensor files plus the declared shapes. Every
file's header is checked against the manifest before training starts, so a
truncated or regenerated corpus aborts the run instead of optimizing on
garbage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .io import probe_shape, read_tensor

__all__ = ["PairCorpus", "CropSampler", "load_corpus"]


@dataclass(frozen=True)
class PairCorpus:
    """Validated view of one synthetic pair corpus."""

    directory: Path
    hr_files: tuple[str, ...]
    lr_files: tuple[str, ...]
    hr_shape: tuple[int, int, int]
    lr_shape: tuple[int, int, int]
    scale: int

    def __len__(self) -> int:
        return len(self.hr_files)

    @property
    def channels(self) -> int:
        return self.hr_shape[0]

    def load_pair(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        hr = read_tensor(self.directory / self.hr_files[k])
        lr = read_tensor(self.directory / self.lr_files[k])
        return hr, lr


def load_corpus(manifest_path) -> PairCorpus:
    """Parse a manifest and header-check every listed pair."""
    manifest_path = Path(manifest_path)
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc

    try:
        files = manifest["files"]
        hr_shape = tuple(manifest["hr_shape"])
        lr_shape = tuple(manifest["lr_shape"])
        scale = int(manifest["scale"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"manifest {manifest_path} lacks field {exc}") from exc
    if not files:
        raise ValidationError(f"manifest {manifest_path} lists no pairs")
    if len(hr_shape) != 3 or len(lr_shape) != 3 or hr_shape[0] != lr_shape[0]:
        raise ValidationError(
            f"manifest shapes {hr_shape} / {lr_shape} are not channel-matched rank-3"
        )
    for hr_dim, lr_dim in zip(hr_shape[1:], lr_shape[1:]):
        if lr_dim != -(-hr_dim // scale):
            raise ValidationError(
                f"manifest shapes {hr_shape} / {lr_shape} do not match scale {scale}"
            )

    directory = manifest_path.parent
    for entry in files:
        for key, want in (("hr", hr_shape), ("lr", lr_shape)):
            got = probe_shape(directory / entry[key])
            if got != want:
                raise ValidationError(
                    f"{entry[key]} declares shape {got}, manifest says {want}"
                )
    return PairCorpus(
        directory=directory,
        hr_files=tuple(e["hr"] for e in files),
        lr_files=tuple(e["lr"] for e in files),
        hr_shape=hr_shape,
        lr_shape=lr_shape,
        scale=scale,
    )


class CropSampler:
    """Aligned random HR/LR crop pairs with flip / rotation augmentation.

    Crops are anchored on the LR grid and scaled up for the HR side, so the
    two crops always show the same scene region. The eight dihedral
    augmentations keep the pairing intact because both tensors are
    transformed identically.
    """

    def __init__(self, corpus: PairCorpus, crop_size: int, seed: int,
                 indices: list[int] | None = None, augment: bool = True):
        if crop_size % corpus.scale:
            raise ValidationError(
                f"crop_size {crop_size} is not a multiple of scale {corpus.scale}"
            )
        self.corpus = corpus
        self.crop_hr = min(crop_size, (min(corpus.hr_shape[1:]) // corpus.scale)
                           * corpus.scale)
        if self.crop_hr < corpus.scale:
            raise ValidationError(
                f"corpus images {corpus.hr_shape} are too small to crop at "
                f"scale {corpus.scale}"
            )
        self.crop_lr = self.crop_hr // corpus.scale
        self.rng = np.random.default_rng(seed)
        self.indices = list(range(len(corpus))) if indices is None else list(indices)
        if not self.indices:
            raise ValidationError("crop sampler needs at least one pair")
        self.augment = augment
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _pair(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if k not in self._cache:
            self._cache[k] = self.corpus.load_pair(k)
        return self._cache[k]

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        """One (hr_crop, lr_crop) pair, channels first, float32."""
        k = self.indices[int(self.rng.integers(len(self.indices)))]
        hr, lr = self._pair(k)
        scale = self.corpus.scale
        # anchor on the LR grid, but keep the scaled-up crop inside the HR
        # image (whose dims need not be multiples of the scale)
        max_r = (hr.shape[1] - self.crop_hr) // scale
        max_c = (hr.shape[2] - self.crop_hr) // scale
        r = int(self.rng.integers(max_r + 1))
        c = int(self.rng.integers(max_c + 1))
        lr_crop = lr[:, r : r + self.crop_lr, c : c + self.crop_lr]
        hr_crop = hr[:, r * scale : r * scale + self.crop_hr,
                     c * scale : c * scale + self.crop_hr]
        if self.augment:
            turns = int(self.rng.integers(4))
            flip = bool(self.rng.integers(2))
            hr_crop = np.rot90(hr_crop, turns, axes=(1, 2))
            lr_crop = np.rot90(lr_crop, turns, axes=(1, 2))
            if flip:
                hr_crop = hr_crop[:, :, ::-1]
                lr_crop = lr_crop[:, :, ::-1]
        return np.ascontiguousarray(hr_crop), np.ascontiguousarray(lr_crop)

    def batch(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        pairs = [self.sample() for _ in range(size)]
        hr = np.stack([p[0] for p in pairs])
        lr = np.stack([p[1] for p in pairs])
        return hr, lr
