"""Patch discriminator exposing intermediate features for feature matching."""

from __future__ import annotations

import torch
from torch import nn

from .generator import init_weights

__all__ = ["PatchDiscriminator"]


class PatchDiscriminator(nn.Module):
    """Stride-2 conv stack scoring overlapping patches.

    ``forward`` returns (score_map, [features per stage]); the feature list
    feeds the feature-matching loss.
    """

    def __init__(self, in_channels: int, base_width: int = 32, layers: int = 3):
        super().__init__()
        blocks = []
        w_in = in_channels
        w = base_width
        for i in range(layers):
            stride = 2 if i < layers - 1 else 1
            blocks.append(
                nn.Sequential(
                    nn.Conv2d(w_in, w, 4, stride=stride, padding=2),
                    nn.LeakyReLU(0.2, inplace=True),
                )
            )
            w_in, w = w, min(w * 2, 8 * base_width)
        self.blocks = nn.ModuleList(blocks)
        self.score = nn.Conv2d(w_in, 1, 4, padding=2)
        init_weights(self)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, list[torch.Tensor]]:
        features = []
        h = x * 2.0 - 1.0
        for block in self.blocks:
            h = block(h)
            features.append(h)
        return self.score(h), features
