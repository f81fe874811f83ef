"""The local aggregation flow completion network.

A P3D encoder aggregates the ``2n+1`` flows of a window, the last encoder
stage and every skip connection collapse the temporal axis onto the target,
and a 2-D decoder predicts a correction to the initialized target flow.
"""

from __future__ import annotations

from typing import List

import torch
import torch.nn.functional as F
from torch import nn

from src.checkpoint import Checkpoint
from src.config import LafcConfig
from src.errors import ShapeError
from src.lafc.blocks import P3DBlock

NEGATIVE_SLOPE = 0.2


class EdgeHead(nn.Module):
    """Projects a flow ``(B, 2, H, W)`` to edge logits ``(B, 1, H, W)``.

    Four convolutions; the middle two form a residual branch.
    """

    def __init__(self, channels: int = 32) -> None:
        super().__init__()
        self.conv_in = nn.Conv2d(2, channels, 3, padding=1)
        self.conv_mid1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv_mid2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv_out = nn.Conv2d(channels, 1, 3, padding=1)
        self.act = nn.LeakyReLU(NEGATIVE_SLOPE)

    def forward(self, flow: torch.Tensor) -> torch.Tensor:
        x = self.act(self.conv_in(flow))
        x = self.act(x + self.conv_mid2(self.act(self.conv_mid1(x))))
        return self.conv_out(x)


class LafcNet(nn.Module):
    """Completes the centre flow of a window from its local references."""

    def __init__(self, config: LafcConfig) -> None:
        super().__init__()
        self.config = config
        self.window_length = config.window_length
        self.factor = 2 ** config.encoder_stages
        widths = [config.base_channels * 2**stage for stage in range(config.encoder_stages)]
        stem_channels = max(config.base_channels // 2, 1)
        act = nn.LeakyReLU(NEGATIVE_SLOPE)
        self.act = act

        self.stem = nn.Sequential(nn.Conv3d(3, stem_channels, (1, 3, 3), padding=(0, 1, 1)), act)
        self.down = nn.ModuleList()
        self.stages = nn.ModuleList()
        previous = stem_channels
        for width in widths:
            self.down.append(
                nn.Sequential(nn.Conv3d(previous, width, (1, 3, 3), stride=(1, 2, 2), padding=(0, 1, 1)), act)
            )
            self.stages.append(P3DBlock(width, width))
            previous = width
        self.bottleneck = P3DBlock(widths[-1], widths[-1], temporal_kernel=self.window_length, reduce_time=True)

        skip_channels = [stem_channels] + widths[:-1]
        self.skips = nn.ModuleList(
            P3DBlock(ch, ch, temporal_kernel=self.window_length, reduce_time=True) for ch in skip_channels
        )
        self.up = nn.ModuleList()
        self.fuse = nn.ModuleList()
        for level, ch in enumerate(skip_channels):
            deeper = widths[level]
            self.up.append(nn.Sequential(nn.ConvTranspose2d(deeper, ch, 4, stride=2, padding=1), act))
            self.fuse.append(nn.Sequential(nn.Conv2d(2 * ch, ch, 3, padding=1), act))
        self.head = nn.Conv2d(stem_channels, 2, 3, padding=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

        self.edge_head = EdgeHead(config.edge_channels)

    def forward(self, flows: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
        """Map a window ``(B, 2n+1, 2, H, W)`` and its masks to the target flow ``(B, 2, H, W)``."""

        if flows.dim() != 5 or flows.shape[1] != self.window_length or flows.shape[2] != 2:
            raise ShapeError(
                f"expected flows of shape (B, {self.window_length}, 2, H, W), got {tuple(flows.shape)}"
            )
        height, width = flows.shape[-2:]
        target = flows[:, self.window_length // 2]

        x = torch.cat([flows, masks.to(flows.dtype)], dim=2).permute(0, 2, 1, 3, 4)
        pad_h = (-height) % self.factor
        pad_w = (-width) % self.factor
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h, 0, 0), mode="replicate")

        features: List[torch.Tensor] = [self.stem(x)]
        for down, stage in zip(self.down, self.stages):
            features.append(self.act(stage(down(features[-1]))))

        y = self.bottleneck(features[-1]).squeeze(2)
        for level in reversed(range(len(self.skips))):
            skip = self.skips[level](features[level]).squeeze(2)
            y = self.fuse[level](torch.cat([self.up[level](y), skip], dim=1))
        delta = self.head(y)[..., :height, :width]
        return target + delta

    def edges(self, flow: torch.Tensor) -> torch.Tensor:
        """Edge logits of a completed flow (training only)."""

        return self.edge_head(flow)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "LafcNet":
        """Rebuild the network from a loaded ``lafc`` checkpoint."""

        model = cls(checkpoint.config.lafc)
        model.load_state_dict(checkpoint.state_dicts["model"])
        return model.eval()


__all__ = ["EdgeHead", "LafcNet"]
