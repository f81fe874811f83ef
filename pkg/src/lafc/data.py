"""Training samples for the flow completion network."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import torch

from src.config import FlowConfig
from src.errors import ShapeError
from src.flowcore.edges import canny_edges
from src.flowcore.fill import laplacian_fill_sequence
from src.lafc.window import FlowWindow, build_window

DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class LafcSample:
    """One completion target with everything its loss needs."""

    window: FlowWindow
    target: torch.Tensor
    reverse_flow: torch.Tensor
    frame: torch.Tensor
    neighbor_frame: torch.Tensor
    gt_edges: torch.Tensor


@dataclass(frozen=True)
class LafcBatch:
    """Samples stacked along a leading batch axis."""

    flows: torch.Tensor
    masks: torch.Tensor
    target: torch.Tensor
    target_mask: torch.Tensor
    reverse_flow: torch.Tensor
    frame: torch.Tensor
    neighbor_frame: torch.Tensor
    gt_edges: torch.Tensor

    def to(self, device: torch.device) -> "LafcBatch":
        return LafcBatch(**{name: getattr(self, name).to(device) for name in self.__dataclass_fields__})


def flow_masks(masks: torch.Tensor, direction: str) -> torch.Tensor:
    """Masks annotating each flow: M_t for forward flow t, M_{t+1} for backward flow t."""

    if direction == "forward":
        return masks[:-1]
    if direction == "backward":
        return masks[1:]
    raise ValueError(f"unknown flow direction {direction!r}")


def make_lafc_samples(
    frames: torch.Tensor,
    flows_fwd: torch.Tensor,
    flows_bwd: torch.Tensor,
    masks: torch.Tensor,
    n: int,
    interval: int,
    flow_config: Optional[FlowConfig] = None,
    directions: Sequence[str] = DIRECTIONS,
    targets: Optional[Iterable[int]] = None,
) -> List[LafcSample]:
    """Build samples for every target flow of a clip.

    The ground-truth flows are corrupted by the clip masks and Laplacian
    filled, which is the input contract of the completion network.
    """

    flow_config = flow_config or FlowConfig()
    count = frames.shape[0] - 1
    if flows_fwd.shape[0] != count or flows_bwd.shape[0] != count or masks.shape[0] != frames.shape[0]:
        raise ShapeError(
            f"clip of {frames.shape[0]} frames needs {count} flows per direction and {frames.shape[0]} masks"
        )
    indices = list(targets) if targets is not None else list(range(count))
    samples: List[LafcSample] = []
    for direction in directions:
        flows = flows_fwd if direction == "forward" else flows_bwd
        reverse = flows_bwd if direction == "forward" else flows_fwd
        annotations = flow_masks(masks, direction)
        filled = laplacian_fill_sequence(flows, annotations, tol=flow_config.fill_tolerance)
        for t in indices:
            source, destination = (t, t + 1) if direction == "forward" else (t + 1, t)
            samples.append(
                LafcSample(
                    window=build_window(filled, annotations, t, n, interval),
                    target=flows[t],
                    reverse_flow=reverse[t],
                    frame=frames[source],
                    neighbor_frame=frames[destination],
                    gt_edges=canny_edges(
                        flows[t], flow_config.canny_low, flow_config.canny_high, flow_config.canny_sigma
                    ),
                )
            )
    return samples


def collate(samples: Sequence[LafcSample]) -> LafcBatch:
    """Stack samples into a batch."""

    return LafcBatch(
        flows=torch.stack([s.window.flows for s in samples]),
        masks=torch.stack([s.window.masks for s in samples]),
        target=torch.stack([s.target for s in samples]),
        target_mask=torch.stack([s.window.target_mask for s in samples]),
        reverse_flow=torch.stack([s.reverse_flow for s in samples]),
        frame=torch.stack([s.frame for s in samples]),
        neighbor_frame=torch.stack([s.neighbor_frame for s in samples]),
        gt_edges=torch.stack([s.gt_edges for s in samples]),
    )


__all__ = ["DIRECTIONS", "LafcSample", "LafcBatch", "flow_masks", "make_lafc_samples", "collate"]
