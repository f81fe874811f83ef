"""Middlebury ``.flo`` reading and writing."""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
import torch

from src.errors import FlowFormatError

FLO_MAGIC = 202021.25  # b"PIEH" read as a little-endian float32
HEADER_BYTES = 12

PathLike = Union[str, Path]


def write_flo(flow: torch.Tensor, path: PathLike) -> None:
    """Write a ``(2, H, W)`` flow as float32 with the ``PIEH`` header."""

    if flow.dim() != 3 or flow.shape[0] != 2:
        raise FlowFormatError(f"flow must have shape (2, H, W), got {tuple(flow.shape)}")
    _, height, width = flow.shape
    payload = flow.detach().cpu().numpy().astype("<f4").transpose(1, 2, 0)
    header = np.array([FLO_MAGIC], dtype="<f4").tobytes() + np.array([width, height], dtype="<i4").tobytes()
    Path(path).write_bytes(header + np.ascontiguousarray(payload).tobytes())


def read_flo(path: PathLike) -> torch.Tensor:
    """Read a ``.flo`` file into a ``(2, H, W)`` float32 tensor."""

    raw = Path(path).read_bytes()
    if len(raw) < HEADER_BYTES:
        raise FlowFormatError(f"{path}: file too short for a .flo header ({len(raw)} bytes)")
    magic = np.frombuffer(raw, dtype="<f4", count=1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise FlowFormatError(f"{path}: bad magic {magic!r}, expected {FLO_MAGIC}")
    width, height = (int(v) for v in np.frombuffer(raw, dtype="<i4", count=2, offset=4))
    if width <= 0 or height <= 0:
        raise FlowFormatError(f"{path}: invalid dimensions {width}x{height}")
    expected = HEADER_BYTES + 4 * 2 * width * height
    if len(raw) < expected:
        raise FlowFormatError(f"{path}: truncated payload ({len(raw)} of {expected} bytes)")
    data = np.frombuffer(raw, dtype="<f4", count=2 * width * height, offset=HEADER_BYTES)
    field = data.reshape(height, width, 2).transpose(2, 0, 1).astype(np.float32)
    return torch.from_numpy(np.ascontiguousarray(field))


__all__ = ["FLO_MAGIC", "read_flo", "write_flo"]
