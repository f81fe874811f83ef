"""Attention and flow-guidance ablations of the transformer on a fixed training budget."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.config import RunConfig
from src.errors import ConfigurationError
from src.harness.dataset import ClipData
from src.harness.logbook import MetricLog
from src.harness.schema import ABLATION_COLUMNS
from src.harness.train_fgt import evaluate_fgt, train_fgt

logger = logging.getLogger(__name__)

# name -> (flow_guidance, use_global_tokens)
VARIANTS: Dict[str, Tuple[str, bool]] = {
    "full": ("reweight", True),
    "window_only": ("reweight", False),
    "no_reweight": ("concat", True),
    "no_flow": ("none", True),
}
DEFAULT_VARIANTS = ("full", "window_only", "no_reweight")
DEFAULT_SEEDS = (0, 1, 2)


def _variant_psnr(
    train_clips: Sequence[ClipData],
    val_clips: Sequence[ClipData],
    config: RunConfig,
    name: str,
    seeds: Sequence[int],
) -> List[float]:
    guidance, use_global = VARIANTS[name]
    setting = config.model_copy(deep=True)
    setting.fgt.flow_guidance = guidance
    setting.fgt.use_global_tokens = use_global
    scores: List[float] = []
    for seed in seeds:
        result = train_fgt(train_clips, val_clips, setting, seed=seed, show_progress=False)
        score = evaluate_fgt(result.generator, val_clips)
        scores.append(float("nan") if score is None else score)
        logger.info(f"{name} (guidance={guidance}, global={use_global}), seed {seed}: PSNR {scores[-1]:.3f}")
    return scores


def ablate_fgt(
    train_clips: Sequence[ClipData],
    val_clips: Sequence[ClipData],
    config: RunConfig,
    variants: Sequence[str] = DEFAULT_VARIANTS,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    out_path: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    """Train every variant once per seed and tabulate mean masked validation PSNR.

    All variants share ``config`` apart from the flow guidance mode and the
    global token switch, so they see the same clips, budget and seeds.
    """

    if not val_clips:
        raise ConfigurationError("the ablation needs validation clips; set data.val_clips above 0")
    unknown = [name for name in variants if name not in VARIANTS]
    if unknown:
        raise ConfigurationError(f"unknown ablation variants {unknown}; choose from {sorted(VARIANTS)}")
    log = MetricLog(ABLATION_COLUMNS, out_path)
    for name in variants:
        guidance, use_global = VARIANTS[name]
        scores = _variant_psnr(train_clips, val_clips, config, name, seeds)
        log.add_row(
            variant=name,
            flow_guidance=guidance,
            global_tokens=use_global,
            seeds=len(seeds),
            psnr_mean=float(np.mean(scores)),
            psnr_std=float(np.std(scores)),
        )
    return log.to_frame()


def mean_by_variant(table: pd.DataFrame) -> Mapping[str, float]:
    return dict(zip(table["variant"], table["psnr_mean"]))


__all__ = ["VARIANTS", "DEFAULT_VARIANTS", "DEFAULT_SEEDS", "ablate_fgt", "mean_by_variant"]
