"""Mixed 3-D / 2-D convolutional abundance super-resolver.

The 3-D stem convolves jointly over the material axis and space, treating
the abundance channels as a short spectral dimension; its features are then
flattened into a 2-D trunk that upsamples with pixel shuffle. The network
predicts a residual on top of bicubic upsampling, so the identity mapping
(plain bicubic) is the zero-weight starting point and training only has to
learn the correction.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

__all__ = ["MixedConvSR"]


class MixedConvSR(nn.Module):
    def __init__(self, in_channels: int, scale: int = 4,
                 features_3d: int = 8, features_2d: int = 64):
        super().__init__()
        if scale not in (2, 4):
            raise ValueError(f"scale must be 2 or 4, got {scale}")
        self.in_channels = in_channels
        self.scale = scale

        self.stem3d = nn.Sequential(
            nn.Conv3d(1, features_3d, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv3d(features_3d, features_3d, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
        )
        self.trunk2d = nn.Sequential(
            nn.Conv2d(features_3d * in_channels, features_2d, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(features_2d, features_2d, 3, padding=1),
            nn.ReLU(inplace=True),
        )
        stages = []
        for _ in range(scale.bit_length() - 1):  # one shuffle per factor of 2
            stages += [
                nn.Conv2d(features_2d, features_2d * 4, 3, padding=1),
                nn.PixelShuffle(2),
                nn.ReLU(inplace=True),
            ]
        self.upsample = nn.Sequential(*stages)
        self.head = nn.Conv2d(features_2d, in_channels, 3, padding=1)
        # zero residual at initialization: the untrained network computes
        # exactly the bicubic upsample, and training learns the correction
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"expected (batch, {self.in_channels}, h, w), got {tuple(x.shape)}"
            )
        base = F.interpolate(x, scale_factor=self.scale, mode="bicubic",
                             align_corners=False)
        feats = self.stem3d(x.unsqueeze(1))
        feats = feats.flatten(1, 2)
        feats = self.trunk2d(feats)
        feats = self.upsample(feats)
        return base + self.head(feats)
