"""Backward warping and forward-backward consistency checks for flow fields.

All functions take channels-first tensors: images ``(..., C, H, W)`` and
flows ``(..., 2, H, W)`` where channel 0 is the horizontal displacement and
channel 1 the vertical one, both in pixels.
"""

from __future__ import annotations

from typing import Tuple

import torch

from src.errors import ShapeError

DEFAULT_TAU = 0.5


def _check_pair(image: torch.Tensor, flow: torch.Tensor) -> None:
    if flow.dim() < 3 or flow.shape[-3] != 2:
        raise ShapeError(f"flow must have shape (..., 2, H, W), got {tuple(flow.shape)}")
    if image.dim() < 3:
        raise ShapeError(f"image must have shape (..., C, H, W), got {tuple(image.shape)}")
    if image.shape[-2:] != flow.shape[-2:]:
        raise ShapeError(
            f"spatial size mismatch: image {tuple(image.shape[-2:])} vs flow {tuple(flow.shape[-2:])}"
        )
    if image.shape[:-3] != flow.shape[:-3]:
        raise ShapeError(
            f"leading dimensions differ: image {tuple(image.shape[:-3])} vs flow {tuple(flow.shape[:-3])}"
        )


def sample_bilinear(image: torch.Tensor, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Bilinearly sample ``image`` (N, C, H, W) at pixel coordinates ``x``, ``y`` (N, H, W).

    Coordinates are clamped to the image rectangle first, so out-of-range
    samples read the nearest border pixel. Integer coordinates reproduce the
    source values exactly.
    """

    n, c, h, w = image.shape
    x = x.clamp(0, w - 1)
    y = y.clamp(0, h - 1)
    x0 = torch.floor(x)
    y0 = torch.floor(y)
    wx = x - x0
    wy = y - y0
    x0i = x0.long()
    y0i = y0.long()
    x1i = (x0i + 1).clamp(max=w - 1)
    y1i = (y0i + 1).clamp(max=h - 1)

    flat = image.reshape(n, c, h * w)

    def gather(yi: torch.Tensor, xi: torch.Tensor) -> torch.Tensor:
        index = (yi * w + xi).reshape(n, 1, h * w).expand(n, c, h * w)
        return flat.gather(2, index).reshape(n, c, h, w)

    wx = wx.unsqueeze(1)
    wy = wy.unsqueeze(1)
    top = gather(y0i, x0i) * (1 - wx) + gather(y0i, x1i) * wx
    bottom = gather(y1i, x0i) * (1 - wx) + gather(y1i, x1i) * wx
    return top * (1 - wy) + bottom * wy


def warp_backward(image: torch.Tensor, flow: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Sample ``image`` at ``x + flow(x)``.

    Returns the warped tensor and a validity mask ``(..., 1, H, W)`` holding 1
    where the sample point lies inside the image rectangle and 0 elsewhere.
    Out-of-range samples take edge-clamped values.
    """

    _check_pair(image, flow)
    lead = image.shape[:-3]
    c, h, w = image.shape[-3:]
    images = image.reshape(-1, c, h, w)
    flows = flow.reshape(-1, 2, h, w).to(images.dtype)

    ys, xs = torch.meshgrid(
        torch.arange(h, dtype=images.dtype, device=images.device),
        torch.arange(w, dtype=images.dtype, device=images.device),
        indexing="ij",
    )
    sx = xs.unsqueeze(0) + flows[:, 0]
    sy = ys.unsqueeze(0) + flows[:, 1]
    inside = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)

    warped = sample_bilinear(images, sx, sy)
    valid = inside.unsqueeze(1).to(images.dtype)
    return warped.reshape(*lead, c, h, w), valid.reshape(*lead, 1, h, w)


def fb_consistency_mask(
    flow_fwd: torch.Tensor,
    flow_bwd: torch.Tensor,
    tau: float = DEFAULT_TAU,
) -> torch.Tensor:
    """Mark pixels whose forward/backward round trip misses by more than ``tau`` pixels.

    ``flow_fwd`` maps frame a to frame b and ``flow_bwd`` maps b back to a.
    The result is 1 where the pixel is occluded or inconsistent, including
    round trips that leave the image.
    """

    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    if flow_fwd.shape != flow_bwd.shape:
        raise ShapeError(
            f"forward and backward flows differ in shape: {tuple(flow_fwd.shape)} vs {tuple(flow_bwd.shape)}"
        )
    sampled_bwd, valid = warp_backward(flow_bwd, flow_fwd)
    residual = torch.linalg.vector_norm(flow_fwd + sampled_bwd, dim=-3, keepdim=True)
    occluded = (residual > tau) | (valid < 0.5)
    return occluded.to(flow_fwd.dtype)


__all__ = ["DEFAULT_TAU", "sample_bilinear", "warp_backward", "fb_consistency_mask"]
