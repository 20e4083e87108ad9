"""Training configuration: JSON in, validated dataclass out."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .exceptions import ValidationError

__all__ = ["TrainConfig"]


@dataclass(frozen=True)
class TrainConfig:
    """Everything one training run needs.

    The loss is L1 and the learning rate stays fixed for the whole run;
    both are part of the training recipe rather than tuning knobs. An epoch
    is ``steps_per_epoch`` optimizer steps over random crops; the default
    covers the corpus once per epoch at the configured batch size.
    """

    manifest: str
    checkpoint_dir: str
    in_channels: int
    epochs: int = 200
    learning_rate: float = 1e-4
    scale: int = 4
    batch_size: int = 8
    crop_size: int = 32
    steps_per_epoch: int | None = None
    seed: int = 0
    holdout_count: int = 0
    augment: bool = True
    features_3d: int = 8
    features_2d: int = 64

    def __post_init__(self):
        if self.in_channels < 1:
            raise ValidationError(f"in_channels must be >= 1, got {self.in_channels}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.scale not in (2, 4):
            raise ValidationError(f"scale must be 2 or 4, got {self.scale}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.crop_size < self.scale or self.crop_size % self.scale:
            raise ValidationError(
                f"crop_size must be a positive multiple of scale, got "
                f"{self.crop_size} at scale {self.scale}"
            )
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise ValidationError(
                f"steps_per_epoch must be >= 1, got {self.steps_per_epoch}"
            )
        if self.holdout_count < 0:
            raise ValidationError(f"holdout_count must be >= 0, got {self.holdout_count}")
        if self.features_3d < 1 or self.features_2d < 1:
            raise ValidationError("feature widths must be >= 1")

    @classmethod
    def from_json_file(cls, path) -> "TrainConfig":
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ValidationError(f"config {path} must hold a JSON object")
        try:
            return cls(**payload)
        except TypeError as exc:
            raise ValidationError(f"config has an unknown or bad field: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "manifest": self.manifest,
            "checkpoint_dir": self.checkpoint_dir,
            "in_channels": self.in_channels,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "scale": self.scale,
            "batch_size": self.batch_size,
            "crop_size": self.crop_size,
            "steps_per_epoch": self.steps_per_epoch,
            "seed": self.seed,
            "holdout_count": self.holdout_count,
            "augment": self.augment,
            "features_3d": self.features_3d,
            "features_2d": self.features_2d,
        }
