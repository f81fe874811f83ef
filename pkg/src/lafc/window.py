"""Local temporal windows of flows around a completion target."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import torch

from src.errors import ShapeError


def window_indices(t: int, n: int, interval: int, length: int) -> List[int]:
    """Indices ``t - n*interval, ..., t, ..., t + n*interval`` clamped to ``[0, length)``."""

    if n < 0 or interval < 1:
        raise ValueError(f"need n >= 0 and interval >= 1, got n={n}, interval={interval}")
    if not 0 <= t < length:
        raise IndexError(f"target index {t} outside a sequence of length {length}")
    return [min(max(t + k * interval, 0), length - 1) for k in range(-n, n + 1)]


@dataclass(frozen=True)
class FlowWindow:
    """``2n+1`` flows ``(2n+1, 2, H, W)`` with their masks ``(2n+1, 1, H, W)``; the centre is the target."""

    flows: torch.Tensor
    masks: torch.Tensor
    n: int
    interval: int
    t: int = 0

    def __post_init__(self) -> None:
        length = 2 * self.n + 1
        if self.flows.dim() != 4 or self.flows.shape[1] != 2:
            raise ShapeError(f"window flows must be (2n+1, 2, H, W), got {tuple(self.flows.shape)}")
        if self.flows.shape[0] != length:
            raise ShapeError(f"window holds {self.flows.shape[0]} flows, expected 2n+1 = {length}")
        if self.masks.shape != (length, 1, *self.flows.shape[-2:]):
            raise ShapeError(f"window masks {tuple(self.masks.shape)} do not match flows {tuple(self.flows.shape)}")

    @property
    def target(self) -> torch.Tensor:
        return self.flows[self.n]

    @property
    def target_mask(self) -> torch.Tensor:
        return self.masks[self.n]


def build_window(flows: torch.Tensor, masks: torch.Tensor, t: int, n: int, interval: int) -> FlowWindow:
    """Cut the window centred on flow ``t`` out of a ``(N, 2, H, W)`` sequence."""

    if flows.shape[0] != masks.shape[0]:
        raise ShapeError(f"{flows.shape[0]} flows but {masks.shape[0]} masks")
    indices = window_indices(t, n, interval, flows.shape[0])
    return FlowWindow(flows=flows[indices], masks=masks[indices], n=n, interval=interval, t=t)


__all__ = ["window_indices", "FlowWindow", "build_window"]
