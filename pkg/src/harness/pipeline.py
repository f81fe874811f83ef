"""The two-stage inpainting pipeline: complete flows, propagate, then synthesize."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import torch

from src.config import RunConfig
from src.errors import InpaintError, ShapeError, StageError
from src.fgt.attention import global_stride_report
from src.fgt.embed import token_grid
from src.fgt.model import FgtNet, fgt_forward
from src.flowcore.fill import laplacian_fill
from src.harness.flow_provider import FlowProvider, ZeroFlowProvider
from src.lafc.complete import complete_filled_sequence
from src.lafc.data import flow_masks
from src.lafc.model import LafcNet
from src.propagation.propagate import propagate

logger = logging.getLogger(__name__)

STAGES = ("flow", "fill", "complete", "propagate", "synthesize")


@dataclass
class StageReport:
    """Frame hole pixels left after a stage, and whether the stage did any work."""

    stage: str
    hole_pixels: int
    skipped: bool = False
    seconds: float = 0.0


@dataclass
class InpaintResult:
    frames: torch.Tensor
    flows_fwd: torch.Tensor
    flows_bwd: torch.Tensor
    diagnostics: List[StageReport] = field(default_factory=list)

    @property
    def hole_area(self) -> Dict[str, int]:
        return {report.stage: report.hole_pixels for report in self.diagnostics}


@contextmanager
def _stage(name: str) -> Iterator[None]:
    """Tag any failure inside the block with the stage name."""

    try:
        yield
    except StageError:
        raise
    except (InpaintError, ValueError, RuntimeError, OSError) as exc:
        raise StageError(name, str(exc)) from exc


def _count(masks: torch.Tensor) -> int:
    return int((masks > 0.5).sum())


def _fill_flows(flows: torch.Tensor, masks: torch.Tensor, tol: float) -> torch.Tensor:
    """Laplacian-fill each flow; fully masked flows have no boundary and start from zero."""

    filled = []
    for t, (flow, mask) in enumerate(zip(flows, masks)):
        if bool((mask > 0.5).all()):
            logger.warning(f"Flow {t} is fully masked; starting it from zero motion")
            filled.append(torch.zeros_like(flow))
        else:
            filled.append(laplacian_fill(flow, mask, tol=tol))
    return torch.stack(filled)


def inpaint_pipeline(
    frames: torch.Tensor,
    masks: torch.Tensor,
    config: RunConfig,
    lafc_model: Optional[LafcNet] = None,
    fgt_model: Optional[FgtNet] = None,
    flow_provider: Optional[FlowProvider] = None,
) -> InpaintResult:
    """Inpaint a clip ``(T, 3, H, W)`` with masks ``(T, 1, H, W)`` (1 = hole).

    Without a flow completion model the Laplacian fill stands in for it. A
    transformer is only required when propagation leaves holes, or for every
    hole when ``config.propagation.enabled`` is off. Valid input pixels come
    back bit-exact.
    """

    provider = flow_provider or ZeroFlowProvider()
    reports: List[StageReport] = []
    holes_in = _count(masks)

    def record(stage: str, hole_pixels: int, started: float, skipped: bool = False) -> None:
        reports.append(StageReport(stage, hole_pixels, skipped, time.perf_counter() - started))
        logger.info(f"Stage {stage}: {hole_pixels} hole pixels{' (skipped)' if skipped else ''}")

    started = time.perf_counter()
    with _stage("flow"):
        if frames.dim() != 4 or masks.shape != (frames.shape[0], 1, *frames.shape[-2:]):
            raise ValueError(f"frames {tuple(frames.shape)} and masks {tuple(masks.shape)} are not aligned")
        flows_fwd, flows_bwd = provider(frames)
    record("flow", holes_in, started)

    if holes_in == 0:
        for stage in STAGES[1:]:
            record(stage, 0, time.perf_counter(), skipped=True)
        return InpaintResult(frames.clone(), flows_fwd, flows_bwd, reports)

    has_flows = frames.shape[0] > 1
    masks_fwd = flow_masks(masks, "forward")
    masks_bwd = flow_masks(masks, "backward")

    started = time.perf_counter()
    with _stage("fill"):
        if has_flows:
            tol = config.flow.fill_tolerance
            if flows_fwd.shape[0] != masks_fwd.shape[0] or flows_bwd.shape[0] != masks_bwd.shape[0]:
                raise ShapeError(f"{flows_fwd.shape[0]} flows for {frames.shape[0]} frames")
            filled_fwd = _fill_flows(flows_fwd, masks_fwd, tol)
            filled_bwd = _fill_flows(flows_bwd, masks_bwd, tol)
        else:
            filled_fwd, filled_bwd = flows_fwd, flows_bwd
    record("fill", holes_in, started, skipped=not has_flows)

    started = time.perf_counter()
    with _stage("complete"):
        if has_flows and lafc_model is not None:
            completed_fwd = complete_filled_sequence(filled_fwd, masks_fwd, lafc_model)
            completed_bwd = complete_filled_sequence(filled_bwd, masks_bwd, lafc_model)
        else:
            if has_flows:
                logger.warning("No flow completion model; using Laplacian-filled flows")
            completed_fwd, completed_bwd = filled_fwd, filled_bwd
    record("complete", holes_in, started, skipped=not has_flows or lafc_model is None)

    started = time.perf_counter()
    propagated, holes = frames, masks
    with _stage("propagate"):
        if config.propagation.enabled:
            max_passes = config.propagation.max_passes or None
            state = propagate(frames, masks, completed_fwd, completed_bwd, tau=config.flow.tau, max_passes=max_passes)
            propagated, holes = state.frames, state.masks
    remaining = _count(holes)
    record("propagate", remaining, started, skipped=not config.propagation.enabled)

    started = time.perf_counter()
    with _stage("synthesize"):
        if remaining == 0:
            result = propagated
        else:
            if fgt_model is None:
                raise ValueError(f"{remaining} hole pixels remain after propagation but no transformer was given")
            grid = token_grid(*frames.shape[-2:])
            window = fgt_model.config.window
            if grid[0] * grid[1] > window[0] * window[1]:
                report = global_stride_report(*grid, *window)
                logger.debug(f"Token grid {grid}: {report}")
            with torch.no_grad():
                result = fgt_forward(
                    propagated,
                    holes,
                    completed_fwd,
                    fgt_model.eval(),
                    flows_bwd=completed_bwd if has_flows else None,
                )
    record("synthesize", 0, started, skipped=remaining == 0)

    output = torch.where(masks > 0.5, result, frames)
    return InpaintResult(output, completed_fwd, completed_bwd, reports)


__all__ = ["STAGES", "StageReport", "InpaintResult", "inpaint_pipeline"]
