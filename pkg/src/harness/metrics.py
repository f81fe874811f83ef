"""Image quality metrics for frames in [0, 1]."""

from __future__ import annotations

import math
from typing import Optional

import torch
import torch.nn.functional as F

from src.errors import EmptyRegionError, ShapeError

PSNR_CAP = 99.0
MSE_FLOOR = 1e-10
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def psnr(pred: torch.Tensor, target: torch.Tensor, region: Optional[torch.Tensor] = None) -> float:
    """``10 log10(1 / MSE)`` over ``region`` (1 = counted), capped at 99 dB.

    ``region`` broadcasts over channels, e.g. a ``(T, 1, H, W)`` mask for
    ``(T, 3, H, W)`` frames.
    """

    if pred.shape != target.shape:
        raise ShapeError(f"prediction {tuple(pred.shape)} and target {tuple(target.shape)} differ")
    diff = (pred.double() - target.double()) ** 2
    if region is None:
        mse = float(diff.mean())
    else:
        weights = region.double().expand_as(diff)
        count = float(weights.sum())
        if count <= 0:
            raise EmptyRegionError("PSNR region is empty")
        mse = float((diff * weights).sum()) / count
    if mse < MSE_FLOOR:
        return PSNR_CAP
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP)


def _gaussian_window(size: int, sigma: float) -> torch.Tensor:
    coords = torch.arange(size, dtype=torch.float64) - (size - 1) / 2
    g = torch.exp(-(coords**2) / (2 * sigma**2))
    g = g / g.sum()
    return torch.outer(g, g)


def ssim(pred: torch.Tensor, target: torch.Tensor) -> float:
    """Mean SSIM of ``(..., C, H, W)`` images with an 11x11 Gaussian window (sigma 1.5).

    Local statistics use only windows lying fully inside the image; channels
    and leading dimensions are averaged.
    """

    if pred.shape != target.shape:
        raise ShapeError(f"prediction {tuple(pred.shape)} and target {tuple(target.shape)} differ")
    if pred.dim() < 3 or min(pred.shape[-2:]) < SSIM_WINDOW:
        raise ShapeError(f"SSIM needs (..., C, H, W) images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    h, w = pred.shape[-2:]
    x = pred.double().reshape(-1, 1, h, w)
    y = target.double().reshape(-1, 1, h, w)
    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA).to(x.device)[None, None]

    def blur(z: torch.Tensor) -> torch.Tensor:
        return F.conv2d(z, window)

    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x**2
    var_y = blur(y * y) - mu_y**2
    cov = blur(x * y) - mu_x * mu_y
    numerator = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    denominator = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float((numerator / denominator).mean())


__all__ = ["PSNR_CAP", "psnr", "ssim"]
