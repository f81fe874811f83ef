"""Column definitions for the metric tables written by trainers and evaluators."""

from __future__ import annotations

from typing import List

LAFC_LOG_COLUMNS: List[str] = [
    "iteration",
    "lr",
    "hole",  # L1 inside the mask
    "valid",  # L1 outside the mask
    "smooth1",
    "smooth2",
    "warp",  # photometric L1 over non-occluded pixels
    "edge",  # BCE against Canny edges, 0 when disabled
    "total",
    "val_epe",  # masked EPE on the validation split, blank between log intervals
]

FGT_LOG_COLUMNS: List[str] = [
    "iteration",
    "lr",
    "hole",
    "valid",
    "adv_g",  # generator hinge loss, 0 when the adversarial weight is 0
    "total",
    "d_loss",  # discriminator hinge loss
    "val_psnr",  # masked PSNR on the validation split
]

SWEEP_COLUMNS: List[str] = [
    "axis",  # number | interval
    "flow_number",  # 2n + 1
    "interval",
    "seeds",
    "epe_mean",
    "epe_std",
]

ABLATION_COLUMNS: List[str] = [
    "variant",
    "flow_guidance",  # none | concat | reweight
    "global_tokens",
    "seeds",
    "psnr_mean",  # masked PSNR on the validation split
    "psnr_std",
]

EVAL_COLUMNS: List[str] = [
    "frame",
    "psnr_hole",
    "psnr_full",
    "ssim_full",
]


__all__ = ["LAFC_LOG_COLUMNS", "FGT_LOG_COLUMNS", "SWEEP_COLUMNS", "ABLATION_COLUMNS", "EVAL_COLUMNS"]
