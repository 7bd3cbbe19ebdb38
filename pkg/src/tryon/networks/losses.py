"""Least-squares adversarial and feature-matching objectives."""

from __future__ import annotations

import torch

__all__ = [
    "lsgan_generator_loss",
    "lsgan_discriminator_loss",
    "feature_matching_loss",
]


def lsgan_generator_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    return torch.mean((fake_scores - 1.0) ** 2)


def lsgan_discriminator_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    return 0.5 * (torch.mean((real_scores - 1.0) ** 2) + torch.mean(fake_scores**2))


def feature_matching_loss(
    fake_features: list[torch.Tensor],
    real_features: list[torch.Tensor],
) -> torch.Tensor:
    """Mean L1 between discriminator features of fake and real inputs."""
    total = fake_features[0].new_zeros(())
    for fake, real in zip(fake_features, real_features):
        total = total + torch.mean(torch.abs(fake - real.detach()))
    return total / len(fake_features)
