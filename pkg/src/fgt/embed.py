"""Convolutional embeddings to the 1/4-resolution token grid and the decoder back to frames."""

from __future__ import annotations

from typing import Tuple

import torch
import torch.nn.functional as F
from torch import nn

DOWNSAMPLE = 4
NEGATIVE_SLOPE = 0.2


def token_grid(height: int, width: int) -> Tuple[int, int]:
    """Token grid of a frame: ``ceil(H/4) x ceil(W/4)``."""

    return -(-height // DOWNSAMPLE), -(-width // DOWNSAMPLE)


def _conv(in_channels: int, out_channels: int, stride: int = 1) -> nn.Conv2d:
    return nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1, padding_mode="replicate")


class PatchEmbed(nn.Module):
    """Strided convolutional encoder from ``(B, T, C_in, H, W)`` to tokens ``(B, T, H/4, W/4, dim)``.

    Frames are replicate-padded to a multiple of 4 first, so any size is accepted.
    """

    def __init__(self, in_channels: int, channels: int, dim: int) -> None:
        super().__init__()
        act = nn.LeakyReLU(NEGATIVE_SLOPE)
        self.encoder = nn.Sequential(
            _conv(in_channels, channels),
            act,
            _conv(channels, 2 * channels, stride=2),
            act,
            _conv(2 * channels, 2 * channels),
            act,
            _conv(2 * channels, 4 * channels, stride=2),
            act,
            nn.Conv2d(4 * channels, dim, 1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, t, c, h, w = x.shape
        y = x.reshape(b * t, c, h, w)
        pad_h = (-h) % DOWNSAMPLE
        pad_w = (-w) % DOWNSAMPLE
        if pad_h or pad_w:
            y = F.pad(y, (0, pad_w, 0, pad_h), mode="replicate")
        y = self.encoder(y)
        return y.permute(0, 2, 3, 1).reshape(b, t, y.shape[-2], y.shape[-1], y.shape[1])


class Decoder(nn.Module):
    """Transposed convolutions from tokens ``(B, T, H', W', dim)`` to frames ``(B, T, 3, H, W)`` in (0, 1)."""

    def __init__(self, dim: int, channels: int, out_channels: int = 3) -> None:
        super().__init__()
        act = nn.LeakyReLU(NEGATIVE_SLOPE)
        self.layers = nn.Sequential(
            nn.Conv2d(dim, 4 * channels, 1),
            act,
            nn.ConvTranspose2d(4 * channels, 2 * channels, 4, stride=2, padding=1),
            act,
            _conv(2 * channels, 2 * channels),
            act,
            nn.ConvTranspose2d(2 * channels, channels, 4, stride=2, padding=1),
            act,
            _conv(channels, out_channels),
        )

    def forward(self, tokens: torch.Tensor, size: Tuple[int, int]) -> torch.Tensor:
        b, t, h, w, c = tokens.shape
        y = self.layers(tokens.reshape(b * t, h, w, c).permute(0, 3, 1, 2))
        y = torch.sigmoid(y[..., : size[0], : size[1]])
        return y.reshape(b, t, y.shape[1], size[0], size[1])


__all__ = ["DOWNSAMPLE", "token_grid", "PatchEmbed", "Decoder"]
