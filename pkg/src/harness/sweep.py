"""Flow number and flow interval sweeps for the completion network."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.config import RunConfig
from src.errors import ConfigurationError
from src.harness.dataset import ClipData, lafc_samples
from src.harness.logbook import MetricLog
from src.harness.schema import SWEEP_COLUMNS
from src.lafc.train import evaluate_lafc, train_lafc

logger = logging.getLogger(__name__)

DEFAULT_NUMBERS = (1, 3, 5, 7)
DEFAULT_INTERVALS = (1, 3, 5, 7)
DEFAULT_SEEDS = (0, 1, 2)


def flow_number_to_n(number: int) -> int:
    """A window of ``number = 2n + 1`` flows."""

    if number < 1 or number % 2 == 0:
        raise ConfigurationError(f"flow number must be a positive odd integer, got {number}")
    return (number - 1) // 2


def _setting_epe(
    train_clips: Sequence[ClipData],
    val_clips: Sequence[ClipData],
    config: RunConfig,
    number: int,
    interval: int,
    seeds: Sequence[int],
) -> List[float]:
    setting = config.model_copy(deep=True)
    setting.lafc.n = flow_number_to_n(number)
    setting.lafc.interval = interval
    train = lafc_samples(train_clips, setting)
    val = lafc_samples(val_clips, setting)
    scores: List[float] = []
    for seed in seeds:
        result = train_lafc(train, val, setting, seed=seed, show_progress=False)
        score = evaluate_lafc(result.model, val)
        scores.append(float("nan") if score is None else score)
        logger.info(f"flow number {number}, interval {interval}, seed {seed}: EPE {scores[-1]:.4f}")
    return scores


def sweep_flow_window(
    train_clips: Sequence[ClipData],
    val_clips: Sequence[ClipData],
    config: RunConfig,
    numbers: Sequence[int] = DEFAULT_NUMBERS,
    intervals: Sequence[int] = DEFAULT_INTERVALS,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    fixed_interval: int = 3,
    fixed_number: int = 3,
    out_path: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    """Train a fresh completion network per setting and seed and tabulate validation EPE.

    One row per flow number (at ``fixed_interval``) and one per interval (at
    ``fixed_number``). Passing an empty sequence skips that axis.
    """

    if not val_clips:
        raise ConfigurationError("the sweep needs validation clips; set data.val_clips above 0")
    log = MetricLog(SWEEP_COLUMNS, out_path)
    settings = [("number", number, fixed_interval) for number in numbers]
    settings += [("interval", fixed_number, interval) for interval in intervals]
    for axis, number, interval in settings:
        scores = _setting_epe(train_clips, val_clips, config, number, interval, seeds)
        row: Dict[str, object] = {
            "axis": axis,
            "flow_number": number,
            "interval": interval,
            "seeds": len(seeds),
            "epe_mean": float(np.mean(scores)),
            "epe_std": float(np.std(scores)),
        }
        log.add_row(**row)
    return log.to_frame()


__all__ = ["DEFAULT_NUMBERS", "DEFAULT_INTERVALS", "DEFAULT_SEEDS", "flow_number_to_n", "sweep_flow_window"]
