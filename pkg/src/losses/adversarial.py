r"""T-PatchGAN discriminator and hinge losses.

:math:`L_D = \mathrm{mean}(\max(0, 1 - D(x_r))) + \mathrm{mean}(\max(0, 1 + D(x_f)))`

:math:`L_G = -\mathrm{mean}(D(x_f))`

The generator loss has no lower bound.
"""

from __future__ import annotations

from typing import List

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.parametrizations import spectral_norm

from src.errors import ClipTooShortError

TEMPORAL_KERNEL = 3
SPATIAL_KERNEL = 5
NEGATIVE_SLOPE = 0.2


def hinge_d_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    """Discriminator hinge loss."""

    return F.relu(1 - real_scores).mean() + F.relu(1 + fake_scores).mean()


def hinge_g_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """Generator hinge loss."""

    return -fake_scores.mean()


class TPatchDiscriminator(nn.Module):
    """Scores spatiotemporal patches of ``(B, T, 3, H, W)`` clips.

    Six spectrally normalized ``(3, 5, 5)`` convolutions with leaky ReLUs;
    layers 2-4 halve the spatial size, all layers keep T. A 1x1x1 linear head
    maps features to scores ``(B, T, 1, H/8, W/8)``.
    """

    def __init__(self, in_channels: int = 3, channels: int = 64) -> None:
        super().__init__()
        widths = [channels, channels * 2, channels * 4, channels * 4, channels * 4, channels * 4]
        strides = [1, 2, 2, 2, 1, 1]
        layers: List[nn.Module] = []
        previous = in_channels
        for width, stride in zip(widths, strides):
            conv = nn.Conv3d(
                previous,
                width,
                kernel_size=(TEMPORAL_KERNEL, SPATIAL_KERNEL, SPATIAL_KERNEL),
                stride=(1, stride, stride),
                padding=(TEMPORAL_KERNEL // 2, SPATIAL_KERNEL // 2, SPATIAL_KERNEL // 2),
                bias=False,
            )
            layers += [spectral_norm(conv), nn.LeakyReLU(NEGATIVE_SLOPE)]
            previous = width
        self.features = nn.Sequential(*layers)
        self.score = nn.Conv3d(previous, 1, kernel_size=1)

    @property
    def min_frames(self) -> int:
        return TEMPORAL_KERNEL

    def forward(self, videos: torch.Tensor) -> torch.Tensor:
        if videos.shape[1] < self.min_frames:
            raise ClipTooShortError(videos.shape[1], self.min_frames)
        x = videos.transpose(1, 2)
        scores = self.score(self.features(x))
        return scores.transpose(1, 2)


__all__ = ["hinge_d_loss", "hinge_g_loss", "TPatchDiscriminator"]
