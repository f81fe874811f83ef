"""Edge maps and finite-difference gradients of flow fields."""

from __future__ import annotations

import torch
from skimage.feature import canny

CANNY_LOW = 0.1
CANNY_HIGH = 0.2
CANNY_SIGMA = 1.0


def canny_edges(
    flow: torch.Tensor,
    low: float = CANNY_LOW,
    high: float = CANNY_HIGH,
    sigma: float = CANNY_SIGMA,
) -> torch.Tensor:
    """Canny edges of the flow magnitude of a ``(2, H, W)`` field.

    The magnitude image is min-max normalized to [0, 1] before smoothing, so
    the hysteresis thresholds are in normalized units. A constant field has
    no edges. Returns a ``(1, H, W)`` tensor of zeros and ones.
    """

    if not 0 <= low <= high:
        raise ValueError(f"thresholds must satisfy 0 <= low <= high, got low={low}, high={high}")
    magnitude = torch.linalg.vector_norm(flow.detach().double(), dim=0).cpu().numpy()
    lo, hi = magnitude.min(), magnitude.max()
    if hi - lo <= 0:
        return torch.zeros(1, *magnitude.shape, dtype=flow.dtype, device=flow.device)
    normalized = (magnitude - lo) / (hi - lo)
    edges = canny(normalized, sigma=sigma, low_threshold=low, high_threshold=high, mode="nearest")
    return torch.from_numpy(edges).to(dtype=flow.dtype, device=flow.device).unsqueeze(0)


def image_gradients(x: torch.Tensor) -> torch.Tensor:
    """Forward differences of ``(..., H, W)`` along x and y, stacked as ``(..., 2, H, W)``.

    The last column of the x-difference and the last row of the y-difference
    are zero.
    """

    dx = torch.zeros_like(x)
    dy = torch.zeros_like(x)
    dx[..., :, :-1] = x[..., :, 1:] - x[..., :, :-1]
    dy[..., :-1, :] = x[..., 1:, :] - x[..., :-1, :]
    return torch.stack((dx, dy), dim=-3)


def flow_gradients(flow: torch.Tensor) -> torch.Tensor:
    """First-order gradients of a ``(..., 2, H, W)`` flow, shaped ``(..., 2, 2, H, W)``.

    Index ``[..., c, d, y, x]`` is the derivative of channel ``c`` along
    direction ``d`` (0 = x, 1 = y). Apply twice for second-order terms.
    """

    return image_gradients(flow)


__all__ = ["CANNY_LOW", "CANNY_HIGH", "CANNY_SIGMA", "canny_edges", "image_gradients", "flow_gradients"]
