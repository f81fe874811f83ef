"""The flow-guided transformer: embeddings, interleaved blocks and the decoder."""

from __future__ import annotations

import logging
from typing import Optional

import torch
from torch import nn

from src.checkpoint import Checkpoint
from src.config import FgtConfig
from src.errors import NonFiniteError, ShapeError
from src.fgt.attention import (
    FlowReweight,
    PositionalEncodingGenerator,
    SpatialDualAttention,
    TemporalZoneAttention,
)
from src.fgt.embed import Decoder, PatchEmbed

logger = logging.getLogger(__name__)

FLOW_SCALE_EPS = 1e-6


class FeedForward(nn.Sequential):
    def __init__(self, dim: int, ratio: float) -> None:
        hidden = max(1, int(round(dim * ratio)))
        super().__init__(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim))


class TemporalBlock(nn.Module):
    """Pre-norm zone attention followed by a pre-norm MLP."""

    kind = "T"

    def __init__(self, config: FgtConfig) -> None:
        super().__init__()
        self.norm1 = nn.LayerNorm(config.dim)
        self.attn = TemporalZoneAttention(config.dim, config.heads, config.zones)
        self.norm2 = nn.LayerNorm(config.dim)
        self.mlp = FeedForward(config.dim, config.mlp_ratio)

    def forward(self, x: torch.Tensor, flow_tokens: Optional[torch.Tensor] = None) -> torch.Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class SpatialBlock(nn.Module):
    """Flow-guided dual-perspective attention followed by a pre-norm MLP.

    The fused tokens are the frame tokens alone (``none``), frame and flow
    tokens side by side (``concat``) or frame tokens with gated flow tokens
    (``reweight``). The attention normalizes them itself.
    """

    kind = "S"

    def __init__(self, config: FgtConfig) -> None:
        super().__init__()
        self.guidance = config.flow_guidance
        self.reweight = FlowReweight(config.dim, config.flow_dim) if self.guidance == "reweight" else None
        token_dim = config.dim if self.guidance == "none" else config.dim + config.flow_dim
        self.attn = SpatialDualAttention(
            token_dim,
            config.dim,
            config.heads,
            window=config.window,
            stride=config.global_stride,
            kernel=config.kernel,
            use_global_tokens=config.use_global_tokens,
        )
        self.norm2 = nn.LayerNorm(config.dim)
        self.mlp = FeedForward(config.dim, config.mlp_ratio)

    def fuse(self, x: torch.Tensor, flow_tokens: Optional[torch.Tensor]) -> torch.Tensor:
        if self.guidance == "none":
            return x
        if flow_tokens is None:
            raise ShapeError(f"flow guidance {self.guidance!r} needs flow tokens")
        if self.reweight is not None:
            return self.reweight(x, flow_tokens)
        return torch.cat([x, flow_tokens], dim=-1)

    def forward(self, x: torch.Tensor, flow_tokens: Optional[torch.Tensor] = None) -> torch.Tensor:
        x = x + self.attn(self.fuse(x, flow_tokens))
        return x + self.mlp(self.norm2(x))


class FgtNet(nn.Module):
    """Synthesizes frames ``(B, T, 3, H, W)`` from masked frames, masks and flows."""

    def __init__(self, config: FgtConfig) -> None:
        super().__init__()
        self.config = config
        self.frame_embed = PatchEmbed(4, config.embed_channels, config.dim)
        self.flow_embed_net = (
            PatchEmbed(2, config.embed_channels, config.flow_dim) if config.flow_guidance != "none" else None
        )
        self.peg = PositionalEncodingGenerator(config.dim)
        self.blocks = nn.ModuleList(
            TemporalBlock(config) if letter == "T" else SpatialBlock(config) for letter in config.blocks
        )
        self.norm = nn.LayerNorm(config.dim)
        self.decoder = Decoder(config.dim, config.embed_channels)

    def patch_embed(self, frames: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
        """Frame tokens from masked frames with the mask as a fourth channel."""

        return self.frame_embed(torch.cat([frames, masks.to(frames.dtype)], dim=2))

    def flow_embed(self, flows: torch.Tensor) -> torch.Tensor:
        return self.flow_embed_net(flows)

    def forward(self, frames: torch.Tensor, masks: torch.Tensor, flows: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Raw synthesis for every pixel; callers composite it into the holes.

        ``frames`` should already be zeroed inside the holes; ``flows`` is
        ``(B, T, 2, H, W)``, one forward flow per frame, scaled to unit range.
        """

        if frames.dim() != 5 or masks.shape[:2] != frames.shape[:2] or masks.shape[-2:] != frames.shape[-2:]:
            raise ShapeError(f"frames {tuple(frames.shape)} and masks {tuple(masks.shape)} are not aligned")
        height, width = frames.shape[-2:]
        x = self.patch_embed(frames, masks)
        flow_tokens = None
        if self.flow_embed_net is not None:
            if flows is None or flows.shape[:2] != frames.shape[:2] or flows.shape[-2:] != frames.shape[-2:]:
                raise ShapeError(f"expected flows of shape {(*frames.shape[:2], 2, height, width)}")
            flow_tokens = self.flow_embed(flows)

        for index, block in enumerate(self.blocks):
            x = block(x, flow_tokens)
            if not torch.isfinite(x).all():
                raise NonFiniteError(f"non-finite activations after block {index} ({block.kind})")
            if index == 0:
                x = self.peg(x)
        return self.decoder(self.norm(x), (height, width))

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "FgtNet":
        """Rebuild the generator from a loaded ``fgt`` checkpoint."""

        model = cls(checkpoint.config.fgt)
        model.load_state_dict(checkpoint.state_dicts["generator"])
        return model.eval()


def flow_guidance_input(flows_fwd: torch.Tensor, flows_bwd: Optional[torch.Tensor] = None) -> torch.Tensor:
    """One flow per frame ``(T, 2, H, W)`` from ``T-1`` forward flows, scaled by the clip's largest magnitude.

    The last frame has no forward flow: it takes the negated last backward
    flow when one is given, otherwise a copy of the last forward flow.
    """

    if flows_fwd.shape[0] == 0:
        raise ShapeError("flow guidance needs at least one forward flow")
    last = -flows_bwd[-1] if flows_bwd is not None else flows_fwd[-1]
    flows = torch.cat([flows_fwd, last.unsqueeze(0)], dim=0)
    scale = flows.norm(dim=1).max() + FLOW_SCALE_EPS
    return flows / scale


def composite(frames: torch.Tensor, masks: torch.Tensor, synthesized: torch.Tensor) -> torch.Tensor:
    """Keep valid pixels from ``frames`` and take holes from ``synthesized``."""

    return torch.where(masks > 0.5, synthesized, frames)


def fgt_forward(
    frames: torch.Tensor,
    masks: torch.Tensor,
    flows_fwd: torch.Tensor,
    model: FgtNet,
    flows_bwd: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Fill the holes of a clip ``(T, 3, H, W)`` with the transformer's synthesis."""

    if frames.shape[0] != masks.shape[0] or flows_fwd.shape[0] != frames.shape[0] - 1:
        raise ShapeError(
            f"{frames.shape[0]} frames need {frames.shape[0]} masks and {frames.shape[0] - 1} forward flows"
        )
    flows = flow_guidance_input(flows_fwd, flows_bwd) if frames.shape[0] > 1 else torch.zeros_like(frames[:, :2])
    parameter = next(model.parameters())
    place = {"device": parameter.device, "dtype": parameter.dtype}
    holes = (masks > 0.5).to(**place)
    masked = frames.to(**place) * (1 - holes)
    out = model(masked.unsqueeze(0), holes.unsqueeze(0), flows.to(**place).unsqueeze(0))[0]
    return composite(frames, masks, out.to(device=frames.device, dtype=frames.dtype))


__all__ = [
    "FLOW_SCALE_EPS",
    "FeedForward",
    "TemporalBlock",
    "SpatialBlock",
    "FgtNet",
    "flow_guidance_input",
    "composite",
    "fgt_forward",
]
