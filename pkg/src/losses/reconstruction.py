"""Masked L1 objectives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import torch

from src.errors import ShapeError


@dataclass
class LossBreakdown:
    """A total loss with its unweighted terms and the weights applied to them."""

    total: torch.Tensor
    terms: Dict[str, torch.Tensor] = field(default_factory=dict)
    weights: Dict[str, float] = field(default_factory=dict)

    def as_floats(self) -> Dict[str, float]:
        """Terms and total as plain floats, for logging."""

        values = {name: float(value.detach()) for name, value in self.terms.items()}
        values["total"] = float(self.total.detach())
        return values


def masked_l1(pred: torch.Tensor, target: torch.Tensor, region: torch.Tensor) -> torch.Tensor:
    """Mean absolute error over ``region`` (1 = counted), normalized by region size times channels.

    An empty region contributes 0.
    """

    if pred.shape != target.shape:
        raise ShapeError(f"prediction {tuple(pred.shape)} and target {tuple(target.shape)} differ")
    weights = region.to(pred.dtype).expand_as(pred)
    count = weights.sum()
    if count <= 0:
        return pred.new_zeros(())
    return ((pred - target).abs() * weights).sum() / count


def reconstruction_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    mask: torch.Tensor,
    hole_weight: float = 1.0,
    valid_weight: float = 1.0,
) -> LossBreakdown:
    """``hole_weight * L1 | M + valid_weight * L1 | (1 - M)`` for frames ``(..., C, H, W)``."""

    hole = masked_l1(pred, target, mask)
    valid = masked_l1(pred, target, 1 - mask)
    return LossBreakdown(
        total=hole_weight * hole + valid_weight * valid,
        terms={"hole": hole, "valid": valid},
        weights={"hole": hole_weight, "valid": valid_weight},
    )


__all__ = ["LossBreakdown", "masked_l1", "reconstruction_loss"]
