"""Training objective of the flow completion network."""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import torch
import torch.nn.functional as F

from src.config import LafcConfig
from src.flowcore.edges import flow_gradients, image_gradients
from src.flowcore.warp import DEFAULT_TAU, fb_consistency_mask, warp_backward
from src.losses.reconstruction import LossBreakdown, masked_l1

logger = logging.getLogger(__name__)


def edge_loss(logits: torch.Tensor, gt_edges: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy between ``sigmoid(logits)`` and a binary edge map."""

    return F.binary_cross_entropy_with_logits(logits, gt_edges.to(logits.dtype))


def smoothness_terms(flow: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Mean absolute first- and second-order forward differences of ``flow``."""

    first = flow_gradients(flow)
    second = image_gradients(first)
    return first.abs().mean(), second.abs().mean()


def lafc_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    mask: torch.Tensor,
    frame: torch.Tensor,
    neighbor_frame: torch.Tensor,
    reverse_flow: torch.Tensor,
    config: LafcConfig,
    edge_logits: Optional[torch.Tensor] = None,
    gt_edges: Optional[torch.Tensor] = None,
    tau: float = DEFAULT_TAU,
) -> LossBreakdown:
    """Weighted sum of the hole, valid, smoothness, warp and edge terms.

    ``pred`` and ``target`` are flows ``(B, 2, H, W)`` from ``frame`` to
    ``neighbor_frame``; ``reverse_flow`` is the ground-truth flow back from
    the neighbour and only serves the occlusion check that restricts the warp
    term. The edge term is 0 when no logits are given.
    """

    hole = masked_l1(pred, target, mask)
    valid = masked_l1(pred, target, 1 - mask)
    smooth1, smooth2 = smoothness_terms(pred)

    warped, inside = warp_backward(neighbor_frame, pred)
    occluded = fb_consistency_mask(target, reverse_flow, tau)
    visible = inside * (1 - occluded)
    if visible.sum() <= 0:
        logger.warning("Warp term skipped: every pixel is occluded or leaves the frame")
        warp = pred.new_zeros(())
    else:
        warp = masked_l1(warped, frame, visible)

    if edge_logits is not None and gt_edges is not None:
        edge = edge_loss(edge_logits, gt_edges)
    else:
        edge = pred.new_zeros(())

    terms = {
        "hole": hole,
        "valid": valid,
        "smooth1": smooth1,
        "smooth2": smooth2,
        "warp": warp,
        "edge": edge,
    }
    weights = {
        "hole": config.hole_weight,
        "valid": config.valid_weight,
        "smooth1": config.smooth1_weight,
        "smooth2": config.smooth2_weight,
        "warp": config.warp_weight,
        "edge": config.edge_weight,
    }
    total = sum(weights[name] * value for name, value in terms.items())
    return LossBreakdown(total=total, terms=terms, weights=weights)


__all__ = ["edge_loss", "smoothness_terms", "lafc_loss"]
