"""Flow accuracy metrics."""

from __future__ import annotations

from typing import Optional

import torch

from src.errors import EmptyRegionError, ShapeError


def epe(pred: torch.Tensor, gt: torch.Tensor, region: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Mean end-point error between two ``(..., 2, H, W)`` flows over ``region``.

    ``region`` is a ``(..., 1, H, W)`` mask selecting the pixels to average
    (1 = included); omitting it averages over every pixel.
    """

    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {tuple(pred.shape)} and ground truth {tuple(gt.shape)} differ")
    error = torch.linalg.vector_norm(pred - gt, dim=-3, keepdim=True)
    if region is None:
        return error.mean()
    weights = region.to(error.dtype).expand_as(error)
    count = weights.sum()
    if count <= 0:
        raise EmptyRegionError("EPE region is empty")
    return (error * weights).sum() / count


__all__ = ["epe"]
