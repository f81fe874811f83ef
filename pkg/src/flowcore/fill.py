"""Laplacian (harmonic) filling of masked flow regions."""

from __future__ import annotations

import logging
import math
from typing import Optional

import torch
import torch.nn.functional as F
from scipy import ndimage

from src.errors import EmptyRegionError, ShapeError

logger = logging.getLogger(__name__)

FILL_TOLERANCE = 1e-4


def _neighbour_sum(u: torch.Tensor) -> torch.Tensor:
    """Sum of the in-image 4-neighbours of every pixel of ``u`` (C, H, W)."""

    padded = F.pad(u.unsqueeze(0), (1, 1, 1, 1)).squeeze(0)
    return padded[:, :-2, 1:-1] + padded[:, 2:, 1:-1] + padded[:, 1:-1, :-2] + padded[:, 1:-1, 2:]


def _relaxation_factor(hole: torch.Tensor) -> float:
    """Over-relaxation factor tuned to the widest connected hole."""

    labels, _ = ndimage.label(hole.cpu().numpy())
    extent = 1
    for box in ndimage.find_objects(labels):
        extent = max(extent, box[0].stop - box[0].start, box[1].stop - box[1].start)
    return 2.0 / (1.0 + math.sin(math.pi / (extent + 1)))


def laplacian_fill(
    flow: torch.Tensor,
    mask: torch.Tensor,
    tol: float = FILL_TOLERANCE,
    max_iter: Optional[int] = None,
    omega: Optional[float] = None,
) -> torch.Tensor:
    """Fill the masked pixels of ``flow`` (C, H, W) with a harmonic interpolant.

    Every channel solves the 4-neighbour discrete Laplace equation inside
    ``mask`` (1, H, W) with the unmasked pixels as Dirichlet data. Pixels on
    the image border only use their in-image neighbours. The solver is
    red-black Gauss-Seidel with over-relaxation ``omega`` (1.0 gives plain
    Gauss-Seidel), stopping once the largest residual drops to ``tol`` or
    after ``10 * (H + W)`` sweeps.
    """

    if flow.dim() != 3:
        raise ShapeError(f"flow must have shape (C, H, W), got {tuple(flow.shape)}")
    c, h, w = flow.shape
    if mask.numel() != h * w:
        raise ShapeError(f"mask of shape {tuple(mask.shape)} does not match flow {tuple(flow.shape)}")
    hole = mask.reshape(h, w) > 0.5
    if not hole.any():
        return flow.clone()
    if hole.all():
        raise EmptyRegionError("mask covers the whole field; there is no boundary data to fill from")

    max_iter = max_iter if max_iter is not None else 10 * (h + w)
    omega = omega if omega is not None else _relaxation_factor(hole)

    u = flow.detach().to(torch.float64).clone()
    known = ~hole
    for channel in range(c):
        u[channel][hole] = u[channel][known].mean()

    ones = torch.ones(1, h, w, dtype=torch.float64, device=u.device)
    degree = _neighbour_sum(ones)
    ys, xs = torch.meshgrid(torch.arange(h, device=u.device), torch.arange(w, device=u.device), indexing="ij")
    red = hole & ((ys + xs) % 2 == 0)
    black = hole & ((ys + xs) % 2 == 1)

    residual = float("inf")
    iterations = 0
    for iterations in range(1, max_iter + 1):
        for colour in (red, black):
            target = _neighbour_sum(u) / degree
            u = torch.where(colour, (1.0 - omega) * u + omega * target, u)
        residual = float((_neighbour_sum(u) - degree * u).abs()[:, hole].max())
        if residual <= tol:
            break
    if residual > tol:
        logger.warning(f"Laplacian fill stopped after {iterations} sweeps with residual {residual:.2e}")
    else:
        logger.debug(f"Laplacian fill converged in {iterations} sweeps (residual {residual:.2e})")

    return torch.where(hole.unsqueeze(0), u.to(flow.dtype), flow)


def laplacian_fill_sequence(flows: torch.Tensor, masks: torch.Tensor, tol: float = FILL_TOLERANCE) -> torch.Tensor:
    """Apply :func:`laplacian_fill` to every field of a ``(N, C, H, W)`` stack."""

    if flows.shape[0] != masks.shape[0]:
        raise ShapeError(f"{flows.shape[0]} flows but {masks.shape[0]} masks")
    return torch.stack([laplacian_fill(flow, mask, tol=tol) for flow, mask in zip(flows, masks)])


__all__ = ["FILL_TOLERANCE", "laplacian_fill", "laplacian_fill_sequence"]
