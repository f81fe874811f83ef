"""Inference-time flow completion."""

from __future__ import annotations

import logging

import torch

from src.errors import NonFiniteError, ShapeError
from src.flowcore.fill import FILL_TOLERANCE, laplacian_fill_sequence
from src.lafc.model import LafcNet
from src.lafc.window import FlowWindow, build_window

logger = logging.getLogger(__name__)


@torch.no_grad()
def complete_flow(window: FlowWindow, model: LafcNet) -> torch.Tensor:
    """Complete the target flow of a Laplacian-filled window.

    The network output only replaces masked pixels; valid pixels of the
    target are passed through unchanged.
    """

    if window.n != model.config.n:
        raise ShapeError(f"window half-length {window.n} does not match the model's n = {model.config.n}")
    device = next(model.parameters()).device
    dtype = next(model.parameters()).dtype
    flows = window.flows.to(device=device, dtype=dtype).unsqueeze(0)
    masks = window.masks.to(device=device, dtype=dtype).unsqueeze(0)
    out = model(flows, masks)[0].to(window.flows.dtype).cpu()
    if not torch.isfinite(out).all():
        raise NonFiniteError(f"flow completion produced non-finite values for target {window.t}")
    mask = window.target_mask
    return torch.where(mask > 0.5, out, window.target)


def complete_filled_sequence(filled: torch.Tensor, masks: torch.Tensor, model: LafcNet) -> torch.Tensor:
    """Complete every flow of an already Laplacian-filled ``(N, 2, H, W)`` sequence.

    Each target sees a window of the filled flows around it. Flows whose mask
    is empty are returned as they are.
    """

    if filled.shape[0] != masks.shape[0]:
        raise ShapeError(f"{filled.shape[0]} flows but {masks.shape[0]} masks")
    was_training = model.training
    model.eval()
    completed = []
    for t in range(filled.shape[0]):
        if not (masks[t] > 0.5).any():
            completed.append(filled[t])
            continue
        window = build_window(filled, masks, t, model.config.n, model.config.interval)
        completed.append(complete_flow(window, model))
    model.train(was_training)
    logger.debug(f"Completed {filled.shape[0]} flows")
    return torch.stack(completed)


def complete_flow_sequence(
    flows: torch.Tensor,
    masks: torch.Tensor,
    model: LafcNet,
    tol: float = FILL_TOLERANCE,
) -> torch.Tensor:
    """Laplacian-fill and complete every flow of a ``(N, 2, H, W)`` sequence.

    ``masks`` are the per-flow annotations ``(N, 1, H, W)``.
    """

    if flows.shape[0] != masks.shape[0]:
        raise ShapeError(f"{flows.shape[0]} flows but {masks.shape[0]} masks")
    return complete_filled_sequence(laplacian_fill_sequence(flows, masks, tol=tol), masks, model)


__all__ = ["complete_flow", "complete_filled_sequence", "complete_flow_sequence"]
