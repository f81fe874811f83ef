"""Pseudo-3D residual convolution blocks."""

from __future__ import annotations

import torch
from torch import nn

from src.errors import ConfigurationError, ShapeError


class P3DBlock(nn.Module):
    """Spatial 2-D convolution followed by a temporal 1-D convolution.

    Activations are ``(B, C, T, H, W)``. In the default form the block is
    residual, ``TC(SC(x)) + x``, and keeps T (the temporal convolution pads by
    replicating the end frames). With ``reduce_time`` the temporal convolution
    is unpadded with kernel ``temporal_kernel``, which shrinks T by
    ``temporal_kernel - 1`` and drops the residual term.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        temporal_kernel: int = 3,
        reduce_time: bool = False,
    ) -> None:
        super().__init__()
        if not reduce_time and in_channels != out_channels:
            raise ConfigurationError(
                f"residual P3D block needs matching channels, got {in_channels} -> {out_channels}"
            )
        self.reduce_time = reduce_time
        self.temporal_kernel = temporal_kernel
        self.spatial = nn.Conv3d(
            in_channels,
            out_channels,
            kernel_size=(1, kernel_size, kernel_size),
            padding=(0, kernel_size // 2, kernel_size // 2),
        )
        if reduce_time:
            self.temporal = nn.Conv3d(out_channels, out_channels, kernel_size=(temporal_kernel, 1, 1))
        else:
            self.temporal = nn.Conv3d(
                out_channels,
                out_channels,
                kernel_size=(temporal_kernel, 1, 1),
                padding=(temporal_kernel // 2, 0, 0),
                padding_mode="replicate",
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.reduce_time and x.shape[2] < self.temporal_kernel:
            raise ShapeError(f"temporal reduction needs T >= {self.temporal_kernel}, got T = {x.shape[2]}")
        out = self.temporal(self.spatial(x))
        if self.reduce_time:
            return out
        return out + x


__all__ = ["P3DBlock"]
