"""Moving-sprite clips with exact optical flow.

Every surface is textured by a closed-form function of its own coordinates,
so a surface point keeps its colour as it moves and the flow of each pixel is
simply the velocity of the topmost surface there. The background is periodic
and may pan; sprites are rectangles or disks moving at constant velocity,
later sprites drawn over earlier ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

from src.harness.masks import MaskSpec

logger = logging.getLogger(__name__)

BACKGROUND = -1
TEXTURE_COMPONENTS = 3


class SpriteSpec(BaseModel):
    """One sprite: its shape, where it starts, how it moves and how it is textured."""

    model_config = ConfigDict(extra="forbid")

    shape: Literal["rect", "disk"] = "rect"
    center: Tuple[float, float]
    size: Tuple[float, float] = Field(..., description="half extents (x, y); disks use the first as radius")
    velocity: Tuple[float, float] = (0.0, 0.0)
    color: Tuple[float, float, float] = (0.8, 0.3, 0.2)
    texture_seed: int = 0


class SyntheticClipSpec(BaseModel):
    """Everything needed to render a clip and its masks deterministically."""

    model_config = ConfigDict(extra="forbid")

    num_frames: int = Field(8, ge=1)
    height: int = Field(64, ge=1)
    width: int = Field(64, ge=1)
    background_seed: int = 0
    pan: Tuple[float, float] = (0.0, 0.0)
    sprites: List[SpriteSpec] = Field(default_factory=list)
    mask: Optional[MaskSpec] = None


@dataclass
class SyntheticClip:
    """Rendered frames ``(T, 3, H, W)``, exact flows ``(T-1, 2, H, W)`` and the surface labels.

    ``labels`` holds the index of the topmost sprite per pixel (``-1`` for
    background); ``in_frame[t, k]`` records whether sprite k lies entirely
    inside frame t.
    """

    frames: torch.Tensor
    flows_fwd: torch.Tensor
    flows_bwd: torch.Tensor
    labels: torch.Tensor
    in_frame: torch.Tensor


def _texture_params(seed: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    kx = rng.integers(1, 5, size=(3, TEXTURE_COMPONENTS))
    ky = rng.integers(0, 5, size=(3, TEXTURE_COMPONENTS))
    phase = rng.uniform(0, 2 * np.pi, size=(3, TEXTURE_COMPONENTS))
    amplitude = rng.uniform(0.05, 0.15, size=(3, TEXTURE_COMPONENTS))
    return kx, ky, phase, amplitude


def background_texture(seed: int, x: np.ndarray, y: np.ndarray, height: int, width: int) -> np.ndarray:
    """Periodic background ``(3, ...)`` evaluated at real coordinates; period ``W`` by ``H``."""

    kx, ky, phase, amplitude = _texture_params(seed)
    base = np.random.default_rng(seed + 1).uniform(0.3, 0.7, size=3)
    out = np.empty((3,) + x.shape)
    for c in range(3):
        value = np.full(x.shape, base[c])
        for j in range(TEXTURE_COMPONENTS):
            value += amplitude[c, j] * np.cos(
                2 * np.pi * (kx[c, j] * x / width + ky[c, j] * y / height) + phase[c, j]
            )
        out[c] = value
    return np.clip(out, 0.0, 1.0)


def sprite_texture(sprite: SpriteSpec, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Sprite colour ``(3, ...)`` at sprite-local offsets from its centre."""

    kx, ky, phase, amplitude = _texture_params(sprite.texture_seed)
    scale = 2 * np.pi / (4 * max(sprite.size[0], 1.0))
    out = np.empty((3,) + dx.shape)
    for c in range(3):
        value = np.full(dx.shape, sprite.color[c])
        for j in range(TEXTURE_COMPONENTS):
            value += amplitude[c, j] * np.cos(scale * (kx[c, j] * dx + ky[c, j] * dy) + phase[c, j])
        out[c] = value
    return np.clip(out, 0.0, 1.0)


def sprite_position(sprite: SpriteSpec, t: float) -> Tuple[float, float]:
    return sprite.center[0] + sprite.velocity[0] * t, sprite.center[1] + sprite.velocity[1] * t


def sprite_cover(sprite: SpriteSpec, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Which pixel centres ``(x, y)`` the sprite covers at time ``t``."""

    cx, cy = sprite_position(sprite, t)
    dx, dy = x - cx, y - cy
    if sprite.shape == "disk":
        return dx**2 + dy**2 < sprite.size[0] ** 2
    return (np.abs(dx) < sprite.size[0]) & (np.abs(dy) < sprite.size[1])


def sprite_in_frame(sprite: SpriteSpec, t: float, height: int, width: int) -> bool:
    cx, cy = sprite_position(sprite, t)
    rx = sprite.size[0]
    ry = sprite.size[0] if sprite.shape == "disk" else sprite.size[1]
    return cx - rx >= 0 and cy - ry >= 0 and cx + rx <= width - 1 and cy + ry <= height - 1


def label_map(spec: SyntheticClipSpec, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Index of the topmost sprite at each pixel, ``-1`` where the background shows."""

    labels = np.full(x.shape, BACKGROUND, dtype=np.int64)
    for index, sprite in enumerate(spec.sprites):
        labels[sprite_cover(sprite, t, x, y)] = index
    return labels


def _velocity_field(spec: SyntheticClipSpec, labels: np.ndarray) -> np.ndarray:
    velocities = np.array([spec.pan] + [sprite.velocity for sprite in spec.sprites], dtype=np.float64)
    return velocities[labels + 1].transpose(2, 0, 1)


def render_frame(spec: SyntheticClipSpec, t: float, x: np.ndarray, y: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Frame ``(3, H, W)`` at time ``t`` given its label map."""

    frame = background_texture(
        spec.background_seed, x - spec.pan[0] * t, y - spec.pan[1] * t, spec.height, spec.width
    )
    for index, sprite in enumerate(spec.sprites):
        where = labels == index
        if where.any():
            cx, cy = sprite_position(sprite, t)
            frame[:, where] = sprite_texture(sprite, x[where] - cx, y[where] - cy)
    return frame


def generate_clip(spec: SyntheticClipSpec) -> SyntheticClip:
    """Render frames and analytic forward and backward flows.

    Forward flow t is the velocity of the surface visible at each pixel of
    frame t; backward flow t is the negated velocity of the surface visible in
    frame t+1. Sprites that leave the frame are clipped, and ``in_frame``
    records it.
    """

    y, x = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    frames, labels = [], []
    in_frame = np.ones((spec.num_frames, len(spec.sprites)), dtype=bool)
    for t in range(spec.num_frames):
        current = label_map(spec, t, x, y)
        labels.append(current)
        frames.append(render_frame(spec, t, x, y, current))
        for index, sprite in enumerate(spec.sprites):
            in_frame[t, index] = sprite_in_frame(sprite, t, spec.height, spec.width)
    if not in_frame.all():
        logger.warning(f"{int((~in_frame).sum())} sprite/frame pairs leave the frame and are clipped")

    flows_fwd = [_velocity_field(spec, labels[t]) for t in range(spec.num_frames - 1)]
    flows_bwd = [-_velocity_field(spec, labels[t + 1]) for t in range(spec.num_frames - 1)]
    empty = np.zeros((0, 2, spec.height, spec.width))
    return SyntheticClip(
        frames=torch.from_numpy(np.stack(frames)).float(),
        flows_fwd=torch.from_numpy(np.stack(flows_fwd) if flows_fwd else empty).float(),
        flows_bwd=torch.from_numpy(np.stack(flows_bwd) if flows_bwd else empty).float(),
        labels=torch.from_numpy(np.stack(labels)),
        in_frame=torch.from_numpy(in_frame),
    )


__all__ = [
    "BACKGROUND",
    "SpriteSpec",
    "SyntheticClipSpec",
    "SyntheticClip",
    "background_texture",
    "sprite_texture",
    "sprite_cover",
    "label_map",
    "render_frame",
    "generate_clip",
]
