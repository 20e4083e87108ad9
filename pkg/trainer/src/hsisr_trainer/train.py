"""Training loop: L1 loss, Adam at a fixed learning rate, atomic checkpoints.

Each epoch draws ``steps_per_epoch`` batches of aligned random crops from
the corpus (default: enough batches to cover the corpus once). The
checkpoint carries the weights together with the architecture parameters
needed to rebuild the network, and is written to a temporary file first so
a crash never leaves a half-written checkpoint behind.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import torch

from .config import TrainConfig
from .data import CropSampler, load_corpus
from .exceptions import ValidationError
from .model import MixedConvSR

__all__ = ["train", "save_checkpoint", "load_checkpoint", "CHECKPOINT_FILE", "LOG_FILE"]

CHECKPOINT_FILE = "model.pt"
LOG_FILE = "train_log.json"


def save_checkpoint(model: MixedConvSR, path, extra: dict | None = None) -> None:
    """Write weights + rebuild parameters, atomically via rename."""
    path = Path(path)
    payload = {
        "state_dict": model.state_dict(),
        "in_channels": model.in_channels,
        "scale": model.scale,
        "features_3d": model.stem3d[0].out_channels,
        "features_2d": model.head.in_channels,
    }
    if extra:
        payload.update(extra)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[MixedConvSR, dict]:
    """Rebuild the network from a checkpoint; returns (model, payload)."""
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError as exc:
        raise ValidationError(f"checkpoint {path} does not exist") from exc
    except Exception as exc:
        raise ValidationError(f"checkpoint {path} is not loadable: {exc}") from exc
    for key in ("state_dict", "in_channels", "scale"):
        if key not in payload:
            raise ValidationError(f"checkpoint {path} lacks field {key!r}")
    model = MixedConvSR(
        in_channels=int(payload["in_channels"]),
        scale=int(payload["scale"]),
        features_3d=int(payload.get("features_3d", 8)),
        features_2d=int(payload.get("features_2d", 64)),
    )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload


def train(cfg: TrainConfig) -> dict:
    """Run one training job; returns the log that was also written to disk."""
    corpus = load_corpus(cfg.manifest)
    if corpus.channels != cfg.in_channels:
        raise ValidationError(
            f"corpus has {corpus.channels} channels, config says {cfg.in_channels}"
        )
    if corpus.scale != cfg.scale:
        raise ValidationError(
            f"corpus was generated at scale {corpus.scale}, config says {cfg.scale}"
        )

    holdout = min(cfg.holdout_count, max(0, len(corpus) - 1))
    train_indices = list(range(len(corpus) - holdout))
    steps = cfg.steps_per_epoch
    if steps is None:
        steps = -(-len(train_indices) // cfg.batch_size)

    torch.manual_seed(cfg.seed)
    sampler = CropSampler(corpus, cfg.crop_size, seed=cfg.seed,
                          indices=train_indices, augment=cfg.augment)
    model = MixedConvSR(cfg.in_channels, cfg.scale,
                        cfg.features_3d, cfg.features_2d)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    ckpt_dir = Path(cfg.checkpoint_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)

    epoch_losses: list[float] = []
    model.train()
    for epoch in range(cfg.epochs):
        total = 0.0
        for _ in range(steps):
            hr, lr = sampler.batch(cfg.batch_size)
            hr_t = torch.from_numpy(hr)
            lr_t = torch.from_numpy(lr)
            optimizer.zero_grad()
            loss = torch.nn.functional.l1_loss(model(lr_t), hr_t)
            loss.backward()
            optimizer.step()
            total += float(loss.detach())
        epoch_losses.append(total / steps)
        print(f"epoch {epoch + 1}/{cfg.epochs}: L1 {epoch_losses[-1]:.5f}")

    model.eval()
    log = {
        "epochs": cfg.epochs,
        "steps_per_epoch": steps,
        "train_pairs": len(train_indices),
        "holdout_pairs": holdout,
        "epoch_l1": epoch_losses,
        "final_l1": epoch_losses[-1] if epoch_losses else None,
        "config": cfg.to_dict(),
    }
    save_checkpoint(model, ckpt_dir / CHECKPOINT_FILE,
                    extra={"epochs_trained": cfg.epochs})
    with open(ckpt_dir / LOG_FILE, "w") as fh:
        json.dump(log, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return log
