"""Where the pipeline gets its raw flows from."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import torch

from src.errors import ConfigurationError, ShapeError
from src.harness.frame_io import read_flows

logger = logging.getLogger(__name__)

FlowPair = Tuple[torch.Tensor, torch.Tensor]


class FlowProvider:
    """Base provider: returns forward and backward flows ``(T-1, 2, H, W)`` for a clip."""

    name = "base"

    def flows(self, frames: torch.Tensor) -> FlowPair:
        raise NotImplementedError

    def __call__(self, frames: torch.Tensor) -> FlowPair:
        fwd, bwd = self.flows(frames)
        t, _, h, w = frames.shape
        expected = (t - 1, 2, h, w)
        if tuple(fwd.shape) != expected or tuple(bwd.shape) != expected:
            raise ShapeError(
                f"{self.name} flows {tuple(fwd.shape)} / {tuple(bwd.shape)} do not match frames; expected {expected}"
            )
        return fwd.to(frames.dtype), bwd.to(frames.dtype)


class GroundTruthFlowProvider(FlowProvider):
    """Flows known in advance, such as the analytic flows of a synthetic clip."""

    name = "gt"

    def __init__(self, flows_fwd: torch.Tensor, flows_bwd: torch.Tensor) -> None:
        self.flows_fwd = flows_fwd
        self.flows_bwd = flows_bwd

    def flows(self, frames: torch.Tensor) -> FlowPair:
        return self.flows_fwd, self.flows_bwd


class FloDirectoryProvider(FlowProvider):
    """Reads ``flows_fwd/`` and ``flows_bwd/`` folders of ``.flo`` files, e.g. from an external estimator."""

    name = "flo"

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root)

    def flows(self, frames: torch.Tensor) -> FlowPair:
        logger.info(f"Reading flows from {self.root}")
        return read_flows(self.root / "flows_fwd"), read_flows(self.root / "flows_bwd")


class ZeroFlowProvider(FlowProvider):
    """All-zero flows, the degenerate baseline."""

    name = "zero"

    def flows(self, frames: torch.Tensor) -> FlowPair:
        t, _, h, w = frames.shape
        zeros = frames.new_zeros(max(t - 1, 0), 2, h, w)
        return zeros, zeros.clone()


def make_flow_provider(kind: str, root: Optional[Union[str, Path]] = None) -> FlowProvider:
    """Provider by name: ``flo`` (needs ``root``) or ``zero``."""

    if kind == "flo":
        if root is None:
            raise ConfigurationError("the flo provider needs a directory")
        return FloDirectoryProvider(root)
    if kind == "zero":
        return ZeroFlowProvider()
    raise ConfigurationError(f"unknown flow provider {kind!r}")


__all__ = [
    "FlowProvider",
    "GroundTruthFlowProvider",
    "FloDirectoryProvider",
    "ZeroFlowProvider",
    "make_flow_provider",
]
