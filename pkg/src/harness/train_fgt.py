"""Adversarial training of the flow-guided transformer."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
import torch
from torch.optim import Adam
from torch.optim.lr_scheduler import MultiStepLR
from tqdm import tqdm

from src.checkpoint import save_checkpoint
from src.config import RunConfig
from src.errors import ConfigurationError, NonFiniteError
from src.fgt.model import FgtNet, composite, fgt_forward, flow_guidance_input
from src.harness.dataset import ClipData
from src.harness.logbook import MetricLog
from src.harness.metrics import psnr
from src.harness.schema import FGT_LOG_COLUMNS
from src.losses.adversarial import TPatchDiscriminator, hinge_d_loss, hinge_g_loss
from src.losses.reconstruction import reconstruction_loss
from src.runtime import resolve_device, seed_everything

logger = logging.getLogger(__name__)


@dataclass
class FgtTrainResult:
    generator: FgtNet
    discriminator: Optional[TPatchDiscriminator]
    history: pd.DataFrame
    checkpoint: Optional[Path] = None


@dataclass
class FgtBatch:
    frames: torch.Tensor
    masks: torch.Tensor
    flows: torch.Tensor


def make_batch(clips: Sequence[ClipData], device: torch.device) -> FgtBatch:
    """Stack clips of equal size; flows are scaled forward flows, one per frame."""

    return FgtBatch(
        frames=torch.stack([clip.frames for clip in clips]).to(device),
        masks=torch.stack([(clip.masks > 0.5).float() for clip in clips]).to(device),
        flows=torch.stack([flow_guidance_input(clip.flows_fwd, clip.flows_bwd) for clip in clips]).to(device),
    )


@torch.no_grad()
def evaluate_fgt(model: FgtNet, clips: Sequence[ClipData]) -> Optional[float]:
    """Mean hole-region PSNR of composited outputs; ``None`` when no clip has holes."""

    was_training = model.training
    model.eval()
    scores: List[float] = []
    for clip in clips:
        if not (clip.masks > 0.5).any():
            continue
        out = fgt_forward(clip.frames, clip.masks, clip.flows_fwd, model, flows_bwd=clip.flows_bwd)
        scores.append(psnr(out, clip.frames, clip.masks))
    model.train(was_training)
    return sum(scores) / len(scores) if scores else None


def train_fgt(
    train_clips: Sequence[ClipData],
    val_clips: Sequence[ClipData],
    config: RunConfig,
    seed: Optional[int] = None,
    out_dir: Optional[Union[str, Path]] = None,
    show_progress: bool = True,
) -> FgtTrainResult:
    """Alternate discriminator and generator updates with hinge losses.

    The generator minimizes the masked reconstruction loss plus
    ``adversarial_weight`` times the generator hinge loss on composited
    clips. An adversarial weight of 0 trains the generator alone.
    """

    if not train_clips:
        raise ConfigurationError("train_fgt needs at least one training clip")
    seed = config.seed if seed is None else seed
    schedule = config.fgt_train
    fgt = config.fgt
    generator = seed_everything(seed)
    device = resolve_device(config.device)

    model = FgtNet(fgt).to(device)
    optimizer = Adam(model.parameters(), lr=schedule.learning_rate)
    scheduler = MultiStepLR(optimizer, milestones=[schedule.milestone], gamma=schedule.gamma)
    adversarial = fgt.adversarial_weight > 0
    disc: Optional[TPatchDiscriminator] = None
    if adversarial:
        disc = TPatchDiscriminator(3, fgt.disc_channels).to(device)
        disc_optimizer = Adam(disc.parameters(), lr=schedule.learning_rate)
        disc_scheduler = MultiStepLR(disc_optimizer, milestones=[schedule.milestone], gamma=schedule.gamma)

    out_path = Path(out_dir) if out_dir is not None else None
    log = MetricLog(FGT_LOG_COLUMNS, out_path / "fgt_log.csv" if out_path else None)
    log.add_row(iteration=0, lr=schedule.learning_rate, val_psnr=evaluate_fgt(model, val_clips))
    logger.info(
        f"Training FGT for {schedule.iterations} iterations (blocks={fgt.blocks}, guidance={fgt.flow_guidance}, "
        f"global tokens={fgt.use_global_tokens}, milestone={schedule.milestone}, seed={seed})"
    )

    model.train()
    for iteration in tqdm(range(1, schedule.iterations + 1), desc="fgt", disable=not show_progress):
        picks = torch.randint(len(train_clips), (schedule.batch_size,), generator=generator).tolist()
        batch = make_batch([train_clips[i] for i in picks], device)
        masked = batch.frames * (1 - batch.masks)
        out = model(masked, batch.masks, batch.flows)
        filled = composite(batch.frames, batch.masks, out)

        values: Dict[str, float] = {}
        if disc is not None:
            d_loss = hinge_d_loss(disc(batch.frames), disc(filled.detach()))
            disc_optimizer.zero_grad()
            d_loss.backward()
            disc_optimizer.step()
            disc_scheduler.step()
            values["d_loss"] = float(d_loss.detach())

        rec = reconstruction_loss(out, batch.frames, batch.masks, fgt.hole_weight, fgt.valid_weight)
        total = rec.total
        if disc is not None:
            adv_g = hinge_g_loss(disc(filled))
            total = total + fgt.adversarial_weight * adv_g
            values["adv_g"] = float(adv_g.detach())
        if not torch.isfinite(total):
            raise NonFiniteError(f"FGT loss diverged at iteration {iteration}: {rec.as_floats()}")
        optimizer.zero_grad()
        total.backward()
        optimizer.step()
        lr = optimizer.param_groups[0]["lr"]
        scheduler.step()

        if iteration % schedule.log_interval == 0 or iteration == schedule.iterations:
            val_psnr = evaluate_fgt(model, val_clips)
            values.update({name: float(term.detach()) for name, term in rec.terms.items()})
            log.add_row(iteration=iteration, lr=lr, total=float(total.detach()), val_psnr=val_psnr, **values)
            logger.info(f"fgt it {iteration}: loss {float(total.detach()):.4f}, val PSNR {val_psnr}")

    checkpoint = None
    if out_path is not None:
        modules = {"generator": model}
        if disc is not None:
            modules["discriminator"] = disc
        checkpoint = save_checkpoint(
            out_path / "fgt.pt", "fgt", config, modules, meta={"seed": seed, "iterations": schedule.iterations}
        )
    return FgtTrainResult(generator=model, discriminator=disc, history=log.to_frame(), checkpoint=checkpoint)


__all__ = ["FgtTrainResult", "FgtBatch", "make_batch", "evaluate_fgt", "train_fgt"]
