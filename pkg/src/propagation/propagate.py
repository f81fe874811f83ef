"""Flow-guided content propagation in the pixel domain.

Each pass runs a forward sweep (frame t pulls from t-1 along the backward
flow) and a backward sweep (frame t pulls from t+1 along the forward flow).
Within a sweep, pixels filled in one frame are available to the next frame,
so content travels along chains of flows. A source sample is accepted only
when it lies inside the image, passes the forward-backward consistency check
and every pixel it interpolates from is currently valid. Candidates from both
sweeps are committed at the end of the pass; where both exist they are
averaged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import torch

from src.errors import ShapeError
from src.flowcore.warp import DEFAULT_TAU, fb_consistency_mask, warp_backward

logger = logging.getLogger(__name__)


@dataclass
class PropagationState:
    """Frames after propagation, the holes that remain and how many pixels each frame gained."""

    frames: torch.Tensor
    masks: torch.Tensor
    fill_count: torch.Tensor
    pass_counts: List[int] = field(default_factory=list)

    @property
    def passes(self) -> int:
        return len(self.pass_counts)


def _check_inputs(frames: torch.Tensor, masks: torch.Tensor, flows_fwd: torch.Tensor, flows_bwd: torch.Tensor) -> None:
    t, _, h, w = frames.shape
    if masks.shape != (t, 1, h, w):
        raise ShapeError(f"masks {tuple(masks.shape)} do not match frames {tuple(frames.shape)}")
    for name, flows in (("forward", flows_fwd), ("backward", flows_bwd)):
        if flows.shape != (t - 1, 2, h, w):
            raise ShapeError(f"{name} flows {tuple(flows.shape)} should be {(t - 1, 2, h, w)}")


def _pull(
    source_frame: torch.Tensor,
    source_hole: torch.Tensor,
    flow: torch.Tensor,
    reverse: torch.Tensor,
    tau: float,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Sample a neighbour frame along ``flow``; return values and a mask of usable samples."""

    values, inside = warp_backward(source_frame, flow)
    hole_weight, _ = warp_backward(source_hole, flow)
    consistent = 1 - fb_consistency_mask(flow, reverse, tau)
    usable = (inside > 0.5) & (consistent > 0.5) & (hole_weight == 0)
    return values, usable


def _sweep(
    frames: torch.Tensor,
    holes: torch.Tensor,
    flows: torch.Tensor,
    reverse: torch.Tensor,
    order: range,
    offset: int,
    tau: float,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """One directional sweep; returns candidate values and where they exist."""

    values = frames.clone()
    current = holes.clone()
    found = torch.zeros_like(holes, dtype=torch.bool)
    for t in order:
        source = t + offset
        flow_index = min(t, source)
        candidate, usable = _pull(values[source], current[source].to(values.dtype), flows[flow_index], reverse[flow_index], tau)
        take = usable & current[t]
        if take.any():
            values[t] = torch.where(take, candidate, values[t])
            current[t] = current[t] & ~take
            found[t] |= take
    return values, found


def propagate(
    frames: torch.Tensor,
    masks: torch.Tensor,
    flows_fwd: torch.Tensor,
    flows_bwd: torch.Tensor,
    tau: float = DEFAULT_TAU,
    max_passes: Optional[int] = None,
) -> PropagationState:
    """Fill holes of ``frames`` (T, 3, H, W) from neighbouring frames along completed flows.

    ``masks`` is (T, 1, H, W) with 1 for holes; forward flow t maps frame t to
    t+1 and backward flow t maps frame t+1 to t. Stops after a pass that fills
    nothing or after ``max_passes`` passes (default T).
    """

    _check_inputs(frames, masks, flows_fwd, flows_bwd)
    count = frames.shape[0]
    max_passes = count if max_passes is None or max_passes <= 0 else max_passes

    state_frames = frames.clone()
    holes = masks > 0.5
    fill_count = torch.zeros(count, dtype=torch.long)
    pass_counts: List[int] = []
    if count < 2 or not holes.any():
        return PropagationState(state_frames, holes.to(masks.dtype), fill_count, pass_counts)

    for index in range(max_passes):
        # frame t pulls from t-1 along backward flow t-1, checked against forward flow t-1
        fwd_values, fwd_found = _sweep(state_frames, holes, flows_bwd, flows_fwd, range(1, count), -1, tau)
        # frame t pulls from t+1 along forward flow t, checked against backward flow t
        bwd_values, bwd_found = _sweep(state_frames, holes, flows_fwd, flows_bwd, range(count - 2, -1, -1), 1, tau)

        both = fwd_found & bwd_found
        merged = torch.where(fwd_found, fwd_values, bwd_values)
        merged = torch.where(both, (fwd_values + bwd_values) / 2, merged)
        filled = fwd_found | bwd_found
        state_frames = torch.where(filled, merged, state_frames)
        holes = holes & ~filled

        per_frame = filled.flatten(1).sum(dim=1)
        fill_count += per_frame
        pass_counts.append(int(per_frame.sum()))
        logger.debug(f"Propagation pass {index + 1}: filled {pass_counts[-1]} pixels, {int(holes.sum())} remain")
        if pass_counts[-1] == 0 or not holes.any():
            break

    return PropagationState(state_frames, holes.to(masks.dtype), fill_count, pass_counts)


__all__ = ["PropagationState", "propagate"]
