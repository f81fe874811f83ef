"""Numbered PNG and ``.flo`` directories."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import torch
from PIL import Image

from src.errors import ShapeError
from src.flowcore.flo_io import read_flo, write_flo
from src.flowcore.viz import flow_to_rgb

logger = logging.getLogger(__name__)

FRAME_PATTERN = "{:05d}.png"
FLOW_PATTERN = "{:05d}.flo"
MASK_THRESHOLD = 127

PathLike = Union[str, Path]


def _numbered(directory: PathLike, suffix: str) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    files = sorted(directory.glob(f"*{suffix}"))
    if not files:
        raise FileNotFoundError(f"no {suffix} files in {directory}")
    return files


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8)


def write_frames(frames: torch.Tensor, directory: PathLike) -> Path:
    """Write ``(T, 3, H, W)`` frames in [0, 1] as 8-bit RGB PNGs."""

    if frames.dim() != 4 or frames.shape[1] != 3:
        raise ShapeError(f"frames must be (T, 3, H, W), got {tuple(frames.shape)}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    array = frames.detach().cpu().numpy().transpose(0, 2, 3, 1)
    for t, image in enumerate(array):
        Image.fromarray(_to_uint8(image)).save(directory / FRAME_PATTERN.format(t))
    return directory


def read_frames(directory: PathLike) -> torch.Tensor:
    images = [np.asarray(Image.open(path).convert("RGB"), dtype=np.float32) / 255.0 for path in _numbered(directory, ".png")]
    return torch.from_numpy(np.stack(images).transpose(0, 3, 1, 2).copy())


def write_masks(masks: torch.Tensor, directory: PathLike) -> Path:
    """Write ``(T, 1, H, W)`` masks as 0 (valid) / 255 (corrupted) grayscale PNGs."""

    if masks.dim() != 4 or masks.shape[1] != 1:
        raise ShapeError(f"masks must be (T, 1, H, W), got {tuple(masks.shape)}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    array = (masks[:, 0].detach().cpu().numpy() > 0.5).astype(np.uint8) * 255
    for t, image in enumerate(array):
        Image.fromarray(image).save(directory / FRAME_PATTERN.format(t))
    return directory


def read_masks(directory: PathLike) -> torch.Tensor:
    """Masks ``(T, 1, H, W)``; any pixel brighter than 127 counts as corrupted."""

    images = [np.asarray(Image.open(path).convert("L")) > MASK_THRESHOLD for path in _numbered(directory, ".png")]
    return torch.from_numpy(np.stack(images)[:, None].astype(np.float32))


def write_flows(flows: torch.Tensor, directory: PathLike, visualize: bool = False) -> Path:
    """Write ``(N, 2, H, W)`` flows as ``.flo`` files, optionally with colour PNGs beside them."""

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t, flow in enumerate(flows):
        write_flo(flow, directory / FLOW_PATTERN.format(t))
        if visualize:
            Image.fromarray(flow_to_rgb(flow)).save(directory / FRAME_PATTERN.format(t))
    return directory


def read_flows(directory: PathLike) -> torch.Tensor:
    """All ``.flo`` files of a directory in name order, stacked to ``(N, 2, H, W)``."""

    directory = Path(directory)
    files = sorted(directory.glob("*.flo")) if directory.is_dir() else []
    if not files:
        raise FileNotFoundError(f"no .flo files in {directory}")
    return torch.stack([read_flo(path) for path in files])


__all__ = [
    "FRAME_PATTERN",
    "FLOW_PATTERN",
    "MASK_THRESHOLD",
    "write_frames",
    "read_frames",
    "write_masks",
    "read_masks",
    "write_flows",
    "read_flows",
]
