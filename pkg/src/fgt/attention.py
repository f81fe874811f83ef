"""Attention layers of the flow-guided transformer.

Token maps are channels-last tensors ``(B, T, H', W', C)``. Temporal blocks
attend inside zone cubes (one zone position across all frames); spatial
blocks attend inside ``h x w`` windows whose keys are extended with global
tokens condensed from the whole frame.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from src.errors import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)


def pad_tokens(x: torch.Tensor, multiple_h: int, multiple_w: int) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
    """Zero-pad a token map so its grid divides evenly.

    Returns the padded map and a ``(B, T, H'', W'')`` boolean mask of real
    tokens, or ``None`` when no padding was needed.
    """

    b, t, h, w, _ = x.shape
    pad_h = (-h) % multiple_h
    pad_w = (-w) % multiple_w
    if not pad_h and not pad_w:
        return x, None
    padded = F.pad(x, (0, 0, 0, pad_w, 0, pad_h))
    valid = torch.zeros(b, t, h + pad_h, w + pad_w, dtype=torch.bool, device=x.device)
    valid[:, :, :h, :w] = True
    return padded, valid


def window_partition(x: torch.Tensor, h: int, w: int) -> torch.Tensor:
    """Split ``(B, T, H, W, C)`` into per-frame windows ``(B*T*nH*nW, h*w, C)``."""

    b, t, height, width, c = x.shape
    if height % h or width % w:
        raise ShapeError(f"grid {height}x{width} is not divisible by window {h}x{w}")
    x = x.reshape(b, t, height // h, h, width // w, w, c).permute(0, 1, 2, 4, 3, 5, 6)
    return x.reshape(-1, h * w, c)


def window_merge(windows: torch.Tensor, shape: Tuple[int, int, int, int], h: int, w: int) -> torch.Tensor:
    """Inverse of :func:`window_partition` for a grid of ``shape = (B, T, H, W)``."""

    b, t, height, width = shape
    c = windows.shape[-1]
    x = windows.reshape(b, t, height // h, width // w, h, w, c).permute(0, 1, 2, 4, 3, 5, 6)
    return x.reshape(b, t, height, width, c)


def zone_partition(x: torch.Tensor, zones: int) -> torch.Tensor:
    """Group a ``zones x zones`` division of every frame into cubes ``(B*g*g, T*zh*zw, C)``."""

    b, t, height, width, c = x.shape
    if height % zones or width % zones:
        raise ShapeError(f"grid {height}x{width} is not divisible into {zones}x{zones} zones")
    zh, zw = height // zones, width // zones
    x = x.reshape(b, t, zones, zh, zones, zw, c).permute(0, 2, 4, 1, 3, 5, 6)
    return x.reshape(b * zones * zones, t * zh * zw, c)


def zone_merge(cubes: torch.Tensor, shape: Tuple[int, int, int, int], zones: int) -> torch.Tensor:
    """Inverse of :func:`zone_partition`."""

    b, t, height, width = shape
    zh, zw = height // zones, width // zones
    c = cubes.shape[-1]
    x = cubes.reshape(b, zones, zones, t, zh, zw, c).permute(0, 3, 1, 4, 2, 5, 6)
    return x.reshape(b, t, height, width, c)


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention over explicit query and key/value sets."""

    def __init__(self, query_dim: int, key_dim: int, dim: int, heads: int, out_dim: Optional[int] = None) -> None:
        super().__init__()
        if dim % heads:
            raise ConfigurationError(f"heads ({heads}) must divide dim ({dim})")
        self.heads = heads
        self.head_dim = dim // heads
        self.scale = self.head_dim**-0.5
        self.to_q = nn.Linear(query_dim, dim)
        self.to_k = nn.Linear(key_dim, dim)
        self.to_v = nn.Linear(key_dim, dim)
        self.proj = nn.Linear(dim, out_dim or dim)

    def forward(
        self,
        queries: torch.Tensor,
        keys: torch.Tensor,
        key_valid: Optional[torch.Tensor] = None,
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Attend ``queries (N, Lq, Cq)`` to ``keys (N, Lk, Ck)``.

        ``key_valid (N, Lk)`` excludes padded keys. Returns the projected
        output and the attention weights ``(N, heads, Lq, Lk)``.
        """

        n, lq, _ = queries.shape
        lk = keys.shape[1]
        q = self.to_q(queries).view(n, lq, self.heads, self.head_dim).transpose(1, 2)
        k = self.to_k(keys).view(n, lk, self.heads, self.head_dim).transpose(1, 2)
        v = self.to_v(keys).view(n, lk, self.heads, self.head_dim).transpose(1, 2)

        scores = (q @ k.transpose(-2, -1)) * self.scale
        if key_valid is not None:
            scores = scores.masked_fill(~key_valid[:, None, None, :], torch.finfo(scores.dtype).min)
        weights = scores.softmax(dim=-1)
        out = (weights @ v).transpose(1, 2).reshape(n, lq, self.heads * self.head_dim)
        return self.proj(out), weights


class TemporalZoneAttention(nn.Module):
    """MHSA inside each zone cube: one of ``g x g`` zones, gathered over all frames."""

    def __init__(self, dim: int, heads: int, zones: int = 2) -> None:
        super().__init__()
        self.zones = zones
        self.attn = MultiHeadAttention(dim, dim, dim, heads)

    def forward(self, x: torch.Tensor, return_weights: bool = False):
        b, t, h, w, _ = x.shape
        padded, valid = pad_tokens(x, self.zones, self.zones)
        grid = (b, t, padded.shape[2], padded.shape[3])
        cubes = zone_partition(padded, self.zones)
        key_valid = None
        if valid is not None:
            key_valid = zone_partition(valid.unsqueeze(-1), self.zones).squeeze(-1)
        out, weights = self.attn(cubes, cubes, key_valid)
        out = zone_merge(out, grid, self.zones)[:, :, :h, :w]
        return (out, weights) if return_weights else out


class FlowReweight(nn.Module):
    """Gate flow tokens by the joint frame/flow content and fuse them with frame tokens.

    ``fixed_gate`` replaces the learned gate by a constant, which is how the
    gate is probed at 0 (flow ignored) and 1 (flow passed through).
    """

    def __init__(self, dim: int, flow_dim: int, hidden: Optional[int] = None) -> None:
        super().__init__()
        hidden = hidden or dim
        self.gate = nn.Sequential(nn.Linear(dim + flow_dim, hidden), nn.GELU(), nn.Linear(hidden, flow_dim))
        self.fixed_gate: Optional[float] = None

    @property
    def out_dim(self) -> int:
        return self.gate[0].in_features

    def forward(self, frame_tokens: torch.Tensor, flow_tokens: torch.Tensor) -> torch.Tensor:
        if frame_tokens.shape[:-1] != flow_tokens.shape[:-1]:
            raise ShapeError(
                f"frame tokens {tuple(frame_tokens.shape)} and flow tokens {tuple(flow_tokens.shape)} "
                "do not share a grid"
            )
        if self.fixed_gate is not None:
            gate = torch.full_like(flow_tokens, float(self.fixed_gate))
        else:
            gate = torch.sigmoid(self.gate(torch.cat([frame_tokens, flow_tokens], dim=-1)))
        return torch.cat([frame_tokens, flow_tokens * gate], dim=-1)


class GlobalTokens(nn.Module):
    """Depth-wise strided convolution condensing a token map to a ``ceil(H'/s) x ceil(W'/s)`` grid."""

    def __init__(self, channels: int, kernel: int, stride: int) -> None:
        super().__init__()
        if stride < 1 or kernel < 1:
            raise ConfigurationError(f"global tokens need kernel >= 1 and stride >= 1, got k={kernel}, s={stride}")
        if kernel < stride:
            logger.warning(f"Global-token kernel {kernel} is smaller than stride {stride}; some tokens are skipped")
        self.kernel = kernel
        self.stride = stride
        self.conv = nn.Conv2d(channels, channels, kernel, stride=stride, groups=channels)

    def _same_padding(self, size: int) -> Tuple[int, int]:
        out = math.ceil(size / self.stride)
        total = max((out - 1) * self.stride + self.kernel - size, 0)
        return total // 2, total - total // 2

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, t, h, w, c = x.shape
        y = x.reshape(b * t, h, w, c).permute(0, 3, 1, 2)
        top, bottom = self._same_padding(h)
        left, right = self._same_padding(w)
        if top or bottom or left or right:
            y = F.pad(y, (left, right, top, bottom), mode="replicate")
        y = self.conv(y)
        return y.permute(0, 2, 3, 1).reshape(b, t, y.shape[-2], y.shape[-1], c)


class SpatialDualAttention(nn.Module):
    """Window attention whose keys and values also include the frame's global tokens.

    Queries come from ``LN(TK)`` inside a window; keys and values from
    ``LN(concat(window, TG))``. The output has ``dim`` channels.
    """

    def __init__(
        self,
        token_dim: int,
        dim: int,
        heads: int,
        window: Tuple[int, int] = (8, 8),
        stride: int = 4,
        kernel: Optional[int] = None,
        use_global_tokens: bool = True,
    ) -> None:
        super().__init__()
        self.window = tuple(window)
        self.norm = nn.LayerNorm(token_dim)
        self.global_tokens = GlobalTokens(token_dim, kernel or 2 * stride, stride) if use_global_tokens else None
        self.attn = MultiHeadAttention(token_dim, token_dim, dim, heads)

    def effective_window(self, height: int, width: int) -> Tuple[int, int]:
        return min(self.window[0], height), min(self.window[1], width)

    def forward(self, tokens: torch.Tensor, return_weights: bool = False):
        b, t, h, w, _ = tokens.shape
        wh, ww = self.effective_window(h, w)
        normed = self.norm(tokens)
        padded, valid = pad_tokens(normed, wh, ww)
        grid = (b, t, padded.shape[2], padded.shape[3])
        windows = window_partition(padded, wh, ww)
        per_frame = windows.shape[0] // (b * t)

        keys = windows
        key_valid = window_partition(valid.unsqueeze(-1), wh, ww).squeeze(-1) if valid is not None else None
        if self.global_tokens is not None:
            condensed = self.norm(self.global_tokens(tokens)).flatten(2, 3)
            count = condensed.shape[2]
            condensed = condensed.unsqueeze(2).expand(b, t, per_frame, count, condensed.shape[-1])
            keys = torch.cat([windows, condensed.reshape(-1, count, condensed.shape[-1])], dim=1)
            if key_valid is not None:
                extra = torch.ones(key_valid.shape[0], count, dtype=torch.bool, device=key_valid.device)
                key_valid = torch.cat([key_valid, extra], dim=1)

        out, weights = self.attn(windows, keys, key_valid)
        out = window_merge(out, grid, wh, ww)[:, :, :h, :w]
        return (out, weights) if return_weights else out


class PositionalEncodingGenerator(nn.Module):
    """Conditional positional embedding: ``x + depthwise3x3(x)`` per frame, zero-initialized."""

    def __init__(self, dim: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(dim, dim, 3, padding=1, groups=dim, padding_mode="replicate")
        nn.init.zeros_(self.conv.weight)
        nn.init.zeros_(self.conv.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, t, h, w, c = x.shape
        y = self.conv(x.reshape(b * t, h, w, c).permute(0, 3, 1, 2))
        return x + y.permute(0, 2, 3, 1).reshape(b, t, h, w, c)


def retrieval_count(height: int, width: int, h: int, w: int, stride: int) -> int:
    """Keys seen by one spatial query: the window plus every global token."""

    return math.ceil(height / stride) * math.ceil(width / stride) + h * w


def min_global_stride(height: int, width: int, h: int, w: int) -> int:
    """Smallest stride for which dual attention references fewer tokens than all-pair attention.

    Starts at ``ceil(sqrt(HW / (HW - hw)))`` and steps up while the ceiling
    terms keep the count at or above ``HW``.
    """

    area = height * width
    if h * w >= area:
        raise ConfigurationError(f"window {h}x{w} covers the whole {height}x{width} grid; the stride bound is undefined")
    closed_form = math.ceil(math.sqrt(area / (area - h * w)))
    stride = closed_form
    while retrieval_count(height, width, h, w, stride) >= area:
        if stride >= max(height, width):
            raise ConfigurationError(
                f"no stride makes window {h}x{w} plus global tokens smaller than the {height}x{width} grid"
            )
        stride += 1
    if stride != closed_form:
        logger.info(f"Closed-form stride {closed_form} raised to {stride} for grid {height}x{width}, window {h}x{w}")
    return stride


@dataclass(frozen=True)
class StrideReport:
    """The stride bound and the key counts around it."""

    closed_form: int
    minimum: int
    count_at_minimum: int
    count_below_minimum: Optional[int]
    all_pairs: int


def global_stride_report(height: int, width: int, h: int, w: int) -> StrideReport:
    minimum = min_global_stride(height, width, h, w)
    area = height * width
    return StrideReport(
        closed_form=math.ceil(math.sqrt(area / (area - h * w))),
        minimum=minimum,
        count_at_minimum=retrieval_count(height, width, h, w, minimum),
        count_below_minimum=retrieval_count(height, width, h, w, minimum - 1) if minimum > 1 else None,
        all_pairs=area,
    )


__all__ = [
    "pad_tokens",
    "window_partition",
    "window_merge",
    "zone_partition",
    "zone_merge",
    "MultiHeadAttention",
    "TemporalZoneAttention",
    "FlowReweight",
    "GlobalTokens",
    "SpatialDualAttention",
    "PositionalEncodingGenerator",
    "retrieval_count",
    "min_global_stride",
    "StrideReport",
    "global_stride_report",
]
