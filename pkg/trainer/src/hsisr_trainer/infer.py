"""Inference: checkpoint + A_LR tensor in, A_SR tensor out.

Deterministic given the checkpoint and input (evaluation mode, no sampling).
The output grid is exactly scale times the input grid; callers that need a
non-multiple target (e.g. 307 from a 77-pixel input at scale 4) crop the
overshoot top-left, which is the convention the pipeline's `reconstruct`
stage applies.
"""

from __future__ import annotations

import numpy as np
import torch

from .exceptions import NumericalError, ValidationError
from .io import read_tensor, write_tensor
from .train import load_checkpoint

__all__ = ["infer", "super_resolve"]


def super_resolve(model, a_lr: np.ndarray) -> np.ndarray:
    """Apply the network to one (N, h, w) abundance tensor."""
    if a_lr.ndim != 3:
        raise ValidationError(f"expected rank-3 input, got rank {a_lr.ndim}")
    if a_lr.shape[0] != model.in_channels:
        raise ValidationError(
            f"input has {a_lr.shape[0]} channels, checkpoint expects "
            f"{model.in_channels}"
        )
    model.eval()
    with torch.no_grad():
        out = model(torch.from_numpy(a_lr).float().unsqueeze(0))
    result = out.squeeze(0).numpy()
    if not np.isfinite(result).all():
        bad = int(np.size(result) - np.isfinite(result).sum())
        raise NumericalError(
            f"network produced {bad} non-finite value(s); refusing to write"
        )
    return result


def infer(checkpoint_path, a_lr_path, out_path) -> tuple[int, ...]:
    """File-level entry point; returns the written output shape."""
    model, _ = load_checkpoint(checkpoint_path)
    a_lr = read_tensor(a_lr_path)
    a_sr = super_resolve(model, a_lr)
    write_tensor(a_sr, out_path)
    return a_sr.shape
