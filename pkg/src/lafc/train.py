"""Training loop for the flow completion network."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd
import torch
from torch.optim import Adam
from torch.optim.lr_scheduler import MultiStepLR
from tqdm import tqdm

from src.checkpoint import save_checkpoint
from src.config import RunConfig
from src.errors import ConfigurationError, NonFiniteError
from src.flowcore.metrics import epe
from src.harness.logbook import MetricLog
from src.harness.schema import LAFC_LOG_COLUMNS
from src.lafc.data import LafcSample, collate
from src.lafc.loss import lafc_loss
from src.lafc.model import LafcNet
from src.runtime import resolve_device, seed_everything

logger = logging.getLogger(__name__)


@dataclass
class LafcTrainResult:
    """What a training run leaves behind."""

    model: LafcNet
    history: pd.DataFrame
    checkpoint: Optional[Path] = None


@torch.no_grad()
def evaluate_lafc(model: LafcNet, samples: Sequence[LafcSample]) -> Optional[float]:
    """Mean masked EPE of the composited completions; ``None`` if no sample has a hole."""

    device = next(model.parameters()).device
    dtype = next(model.parameters()).dtype
    was_training = model.training
    model.eval()
    errors: List[float] = []
    for sample in samples:
        mask = sample.window.target_mask
        if not (mask > 0.5).any():
            continue
        out = model(
            sample.window.flows.unsqueeze(0).to(device=device, dtype=dtype),
            sample.window.masks.unsqueeze(0).to(device=device, dtype=dtype),
        )[0].cpu().to(sample.target.dtype)
        completed = torch.where(mask > 0.5, out, sample.window.target)
        errors.append(float(epe(completed, sample.target, mask)))
    model.train(was_training)
    return sum(errors) / len(errors) if errors else None


def train_lafc(
    train_samples: Sequence[LafcSample],
    val_samples: Sequence[LafcSample],
    config: RunConfig,
    seed: Optional[int] = None,
    out_dir: Optional[Union[str, Path]] = None,
    show_progress: bool = True,
) -> LafcTrainResult:
    """Optimize a fresh network with Adam and a single step decay.

    A row is logged before the first step (iteration 0) and every
    ``log_interval`` iterations, including validation EPE when
    ``val_samples`` is non-empty. A non-finite loss aborts the run.
    """

    if not train_samples:
        raise ConfigurationError("train_lafc needs at least one training sample")
    seed = config.seed if seed is None else seed
    schedule = config.lafc_train
    generator = seed_everything(seed)
    device = resolve_device(config.device)

    model = LafcNet(config.lafc).to(device)
    optimizer = Adam(model.parameters(), lr=schedule.learning_rate)
    scheduler = MultiStepLR(optimizer, milestones=[schedule.milestone], gamma=schedule.gamma)
    out_path = Path(out_dir) if out_dir is not None else None
    log = MetricLog(LAFC_LOG_COLUMNS, out_path / "lafc_log.csv" if out_path else None)
    use_edges = config.lafc.edge_weight > 0

    log.add_row(iteration=0, lr=schedule.learning_rate, val_epe=evaluate_lafc(model, val_samples))
    logger.info(
        f"Training LAFC for {schedule.iterations} iterations (n={config.lafc.n}, interval={config.lafc.interval}, "
        f"milestone={schedule.milestone}, seed={seed})"
    )
    model.train()
    for iteration in tqdm(range(1, schedule.iterations + 1), desc="lafc", disable=not show_progress):
        picks = torch.randint(len(train_samples), (schedule.batch_size,), generator=generator).tolist()
        batch = collate([train_samples[i] for i in picks]).to(device)
        pred = model(batch.flows, batch.masks)
        edge_logits = model.edges(pred) if use_edges else None
        loss = lafc_loss(
            pred,
            batch.target,
            batch.target_mask,
            batch.frame,
            batch.neighbor_frame,
            batch.reverse_flow,
            config.lafc,
            edge_logits=edge_logits,
            gt_edges=batch.gt_edges,
            tau=config.flow.tau,
        )
        if not torch.isfinite(loss.total):
            raise NonFiniteError(f"LAFC loss diverged at iteration {iteration}: {loss.as_floats()}")
        optimizer.zero_grad()
        loss.total.backward()
        optimizer.step()
        lr = optimizer.param_groups[0]["lr"]
        scheduler.step()

        if iteration % schedule.log_interval == 0 or iteration == schedule.iterations:
            val_epe = evaluate_lafc(model, val_samples)
            log.add_row(iteration=iteration, lr=lr, val_epe=val_epe, **loss.as_floats())
            logger.info(f"lafc it {iteration}: loss {float(loss.total):.4f}, val EPE {val_epe}")

    checkpoint = None
    if out_path is not None:
        checkpoint = save_checkpoint(
            out_path / "lafc.pt", "lafc", config, {"model": model}, meta={"seed": seed, "iterations": schedule.iterations}
        )
    return LafcTrainResult(model=model, history=log.to_frame(), checkpoint=checkpoint)


__all__ = ["LafcTrainResult", "evaluate_lafc", "train_lafc"]
