"""Per-frame quality tables and a JSON summary for inpainted clips."""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Optional, Union

import pandas as pd
import torch
from pydantic import BaseModel

from src.errors import ShapeError
from src.flowcore.metrics import epe
from src.harness.frame_io import read_flows, read_frames, read_masks
from src.harness.logbook import MetricLog
from src.harness.metrics import psnr, ssim
from src.harness.schema import EVAL_COLUMNS
from src.lafc.data import flow_masks

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"


class EvaluationSummary(BaseModel):
    """Clip-level means; hole PSNR averages frames that have holes."""

    frames: int
    hole_frames: int
    psnr_hole: Optional[float] = None
    psnr_hole_clip: Optional[float] = None
    psnr_full: float
    ssim_full: float
    epe_hole: Optional[float] = None


def evaluate_clip(pred: torch.Tensor, target: torch.Tensor, masks: torch.Tensor) -> pd.DataFrame:
    """One row per frame: PSNR over the hole (blank without one), full-frame PSNR and SSIM."""

    if pred.shape != target.shape or masks.shape[0] != pred.shape[0]:
        raise ShapeError(f"prediction {tuple(pred.shape)}, target {tuple(target.shape)}, masks {tuple(masks.shape)}")
    log = MetricLog(EVAL_COLUMNS)
    for t in range(pred.shape[0]):
        hole = masks[t] > 0.5
        log.add_row(
            frame=t,
            psnr_hole=psnr(pred[t], target[t], hole) if hole.any() else math.nan,
            psnr_full=psnr(pred[t], target[t]),
            ssim_full=ssim(pred[t], target[t]),
        )
    return log.to_frame()


def flow_epe(pred_fwd: torch.Tensor, gt_fwd: torch.Tensor, masks: torch.Tensor) -> Optional[float]:
    """Masked EPE of forward flows, annotated by the mask of their source frame."""

    region = flow_masks(masks, "forward") > 0.5
    if not region.any():
        return None
    return float(epe(pred_fwd, gt_fwd, region))


def summarize(table: pd.DataFrame, pred: torch.Tensor, target: torch.Tensor, masks: torch.Tensor) -> EvaluationSummary:
    hole = table["psnr_hole"].dropna()
    any_hole = bool((masks > 0.5).any())
    return EvaluationSummary(
        frames=len(table),
        hole_frames=len(hole),
        psnr_hole=float(hole.mean()) if len(hole) else None,
        psnr_hole_clip=psnr(pred, target, masks > 0.5) if any_hole else None,
        psnr_full=float(table["psnr_full"].mean()),
        ssim_full=float(table["ssim_full"].mean()),
    )


def evaluate_directories(
    pred_dir: Union[str, Path],
    gt_dir: Union[str, Path],
    mask_dir: Union[str, Path],
    out_dir: Union[str, Path],
    pred_flow_dir: Optional[Union[str, Path]] = None,
    gt_flow_dir: Optional[Union[str, Path]] = None,
) -> EvaluationSummary:
    """Score a directory of inpainted frames against ground truth; writes CSV and JSON to ``out_dir``.

    Flow directories are folders of forward ``.flo`` files; when both are
    given the summary includes the hole EPE.
    """

    pred, target, masks = read_frames(pred_dir), read_frames(gt_dir), read_masks(mask_dir)
    table = evaluate_clip(pred, target, masks)
    summary = summarize(table, pred, target, masks)
    if pred_flow_dir is not None and gt_flow_dir is not None:
        summary.epe_hole = flow_epe(read_flows(pred_flow_dir), read_flows(gt_flow_dir), masks)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    MetricLog(EVAL_COLUMNS, out_dir / METRICS_FILE).append_rows(table.to_dict("records"))
    (out_dir / SUMMARY_FILE).write_text(summary.model_dump_json(indent=2))
    logger.info(f"Evaluation written to {out_dir}: {summary.model_dump()}")
    return summary


__all__ = ["EvaluationSummary", "evaluate_clip", "flow_epe", "summarize", "evaluate_directories"]
