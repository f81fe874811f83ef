"""Colour rendering of flow fields for inspection."""

from __future__ import annotations

from typing import Optional

import numpy as np
import torch
from skimage.color import hsv2rgb


def flow_to_rgb(flow: torch.Tensor, max_magnitude: Optional[float] = None) -> np.ndarray:
    """Map a ``(2, H, W)`` flow to an ``(H, W, 3)`` uint8 image.

    Direction sets the hue and magnitude, divided by ``max_magnitude`` (the
    field maximum by default), sets the saturation.
    """

    dx, dy = flow.detach().double().cpu().numpy()
    magnitude = np.hypot(dx, dy)
    scale = max_magnitude if max_magnitude is not None else float(magnitude.max())
    hue = (np.arctan2(-dy, -dx) / np.pi + 1.0) / 2.0
    saturation = np.clip(magnitude / scale, 0.0, 1.0) if scale > 0 else np.zeros_like(magnitude)
    hsv = np.stack([hue, saturation, np.ones_like(magnitude)], axis=-1)
    return np.round(hsv2rgb(hsv) * 255.0).astype(np.uint8)


__all__ = ["flow_to_rgb"]
