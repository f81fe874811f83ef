"""Moving corruption masks: a square or an ellipse walking across the clip."""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

DEFAULT_COVERAGE = 1 / 16


class MaskSpec(BaseModel):
    """A mask trace: its shape, the fraction of each frame it covers and how far it moves."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["square", "object"] = "square"
    coverage: float = Field(DEFAULT_COVERAGE, gt=0, lt=1)
    step: float = Field(2.0, ge=0, description="standard deviation of the per-frame displacement in pixels")
    seed: int = 0


def _walk(rng: np.random.Generator, start: np.ndarray, low: np.ndarray, high: np.ndarray, step: float, limit: float, count: int) -> np.ndarray:
    """Random walk of ``count`` positions kept inside ``[low, high]`` with steps of at most ``limit``."""

    positions = [np.clip(start, low, high)]
    for _ in range(count - 1):
        move = np.clip(rng.normal(0.0, step, size=2), -limit, limit) if step > 0 else np.zeros(2)
        positions.append(np.clip(positions[-1] + move, low, high))
    return np.stack(positions)


def _square_masks(spec: MaskSpec, rng: np.random.Generator, frames: int, height: int, width: int) -> np.ndarray:
    side = int(min(max(1, round(math.sqrt(spec.coverage * height * width))), height, width))
    high = np.array([width - side, height - side], dtype=np.float64)
    start = rng.uniform(0, 1, size=2) * high
    corners = np.rint(_walk(rng, start, np.zeros(2), high, spec.step, side // 2, frames)).astype(int)
    masks = np.zeros((frames, height, width), dtype=np.float32)
    for t, (x0, y0) in enumerate(corners):
        masks[t, y0 : y0 + side, x0 : x0 + side] = 1.0
    return masks


def _object_masks(spec: MaskSpec, rng: np.random.Generator, frames: int, height: int, width: int) -> np.ndarray:
    area = spec.coverage * height * width
    aspect = rng.uniform(0.6, 1.6)
    a = min(math.sqrt(area * aspect / math.pi), (width - 1) / 2)
    b = min(area / (math.pi * a), (height - 1) / 2)
    reach = max(a, b)
    low = np.array([reach, reach])
    high = np.array([width - 1 - reach, height - 1 - reach])
    high = np.maximum(high, low)
    start = low + rng.uniform(0, 1, size=2) * (high - low)
    centres = _walk(rng, start, low, high, spec.step, min(a, b) / 2, frames)
    angle = rng.uniform(0, np.pi)
    spin = rng.normal(0.0, 0.05)

    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    masks = np.zeros((frames, height, width), dtype=np.float32)
    for t, (cx, cy) in enumerate(centres):
        theta = angle + spin * t
        u = (x - cx) * math.cos(theta) + (y - cy) * math.sin(theta)
        v = -(x - cx) * math.sin(theta) + (y - cy) * math.cos(theta)
        masks[t] = ((u / a) ** 2 + (v / b) ** 2 <= 1.0).astype(np.float32)
    return masks


def generate_masks(spec: MaskSpec, frames: int, height: int, width: int) -> torch.Tensor:
    """Masks ``(T, 1, H, W)`` with 1 on corrupted pixels, deterministic in ``spec.seed``.

    Steps are clamped so consecutive masks always overlap.
    """

    rng = np.random.default_rng(spec.seed)
    build = _square_masks if spec.kind == "square" else _object_masks
    return torch.from_numpy(build(spec, rng, frames, height, width)).unsqueeze(1)


__all__ = ["DEFAULT_COVERAGE", "MaskSpec", "generate_masks"]
