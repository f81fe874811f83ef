"""Synthetic datasets: random clip specs, generation, and the on-disk layout.

A dataset directory holds ``clip_XXXX`` folders, each with ``frames/``,
``masks/``, ``flows_fwd/`` and ``flows_bwd/`` (``%05d.png`` / ``%05d.flo``)
and the ``clip.json`` spec the clip was rendered from.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from tqdm import tqdm

from src.config import DataConfig, RunConfig
from src.harness.frame_io import read_flows, read_frames, read_masks, write_flows, write_frames, write_masks
from src.harness.masks import MaskSpec, generate_masks
from src.harness.synthetic import SpriteSpec, SyntheticClipSpec, generate_clip
from src.lafc.data import LafcSample, make_lafc_samples

logger = logging.getLogger(__name__)

SPEC_FILE = "clip.json"


@dataclass
class ClipData:
    """A clip ready for training or evaluation; masks mark the pixels to inpaint."""

    name: str
    frames: torch.Tensor
    masks: torch.Tensor
    flows_fwd: torch.Tensor
    flows_bwd: torch.Tensor
    spec: Optional[SyntheticClipSpec] = None

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


def _speed(rng: np.random.Generator, limit: float, integer: bool) -> float:
    value = rng.uniform(-limit, limit)
    return float(round(value)) if integer else float(value)


def _fit_axis(rng: np.random.Generator, extent: int, radius: float, velocity: float, frames: int) -> Tuple[float, float]:
    """Pick a start coordinate keeping the sprite inside ``[0, extent - 1]`` for the whole clip."""

    travel = velocity * (frames - 1)
    low = radius - min(0.0, travel)
    high = extent - 1 - radius - max(0.0, travel)
    if low > high:
        velocity = 0.0
        low, high = radius, extent - 1 - radius
    return float(rng.uniform(low, max(low, high))), velocity


def random_clip_spec(config: DataConfig, seed: int) -> SyntheticClipSpec:
    """Draw a clip spec (sprites, pan and mask) from ``config``; deterministic in ``seed``."""

    rng = np.random.default_rng(seed)
    h, w, frames = config.height, config.width, config.num_frames
    sprites: List[SpriteSpec] = []
    for index in range(config.num_sprites):
        shape = "disk" if rng.uniform() < 0.5 else "rect"
        rx = float(rng.uniform(min(h, w) / 10, min(h, w) / 5))
        ry = rx if shape == "disk" else float(rng.uniform(min(h, w) / 10, min(h, w) / 5))
        cx, vx = _fit_axis(rng, w, rx, _speed(rng, config.max_speed, config.integer_motion), frames)
        cy, vy = _fit_axis(rng, h, ry, _speed(rng, config.max_speed, config.integer_motion), frames)
        sprites.append(
            SpriteSpec(
                shape=shape,
                center=(cx, cy),
                size=(rx, ry),
                velocity=(vx, vy),
                color=tuple(float(c) for c in rng.uniform(0.1, 0.9, size=3)),
                texture_seed=int(rng.integers(2**31)),
            )
        )
    pan = (0.0, 0.0)
    if config.pan_speed > 0:
        angle = rng.uniform(0, 2 * math.pi)
        pan = (config.pan_speed * math.cos(angle), config.pan_speed * math.sin(angle))
        if config.integer_motion:
            pan = (float(round(pan[0])), float(round(pan[1])))
    mask = MaskSpec(
        kind=config.mask_kind,
        coverage=config.mask_coverage,
        step=config.mask_step,
        seed=int(rng.integers(2**31)),
    )
    return SyntheticClipSpec(
        num_frames=frames,
        height=h,
        width=w,
        background_seed=int(rng.integers(2**31)),
        pan=pan,
        sprites=sprites,
        mask=mask,
    )


def build_clip(spec: SyntheticClipSpec, name: str = "clip") -> ClipData:
    """Render a spec and its masks."""

    clip = generate_clip(spec)
    mask_spec = spec.mask or MaskSpec()
    masks = generate_masks(mask_spec, spec.num_frames, spec.height, spec.width)
    return ClipData(name, clip.frames, masks, clip.flows_fwd, clip.flows_bwd, spec)


def _build_named(job: Tuple[str, SyntheticClipSpec]) -> ClipData:
    name, spec = job
    return build_clip(spec, name)


def clip_seeds(seed: int, count: int) -> List[int]:
    """Independent per-clip seeds derived from one run seed."""

    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def generate_dataset(
    config: DataConfig,
    seed: int,
    count: Optional[int] = None,
    workers: int = 0,
    show_progress: bool = False,
) -> List[ClipData]:
    """Generate ``count`` clips (default ``config.num_clips``), optionally in a process pool.

    Clips depend only on their own seed, so the pool yields the same clips as
    the sequential path.
    """

    count = config.num_clips if count is None else count
    jobs = [(f"clip_{i:04d}", random_clip_spec(config, s)) for i, s in enumerate(clip_seeds(seed, count))]
    if workers and workers > 1 and count > 1:
        logger.info(f"Generating {count} clips with {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(_build_named, jobs), total=count, desc="clips", disable=not show_progress))
    return [_build_named(job) for job in tqdm(jobs, desc="clips", disable=not show_progress)]


def save_clip(clip: ClipData, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    write_frames(clip.frames, directory / "frames")
    write_masks(clip.masks, directory / "masks")
    write_flows(clip.flows_fwd, directory / "flows_fwd")
    write_flows(clip.flows_bwd, directory / "flows_bwd")
    if clip.spec is not None:
        (directory / SPEC_FILE).write_text(clip.spec.model_dump_json(indent=2))
    return directory


def load_clip(directory: Union[str, Path]) -> ClipData:
    """Read a clip folder. Frames come back quantized to 8 bits."""

    directory = Path(directory)
    spec = None
    if (directory / SPEC_FILE).exists():
        spec = SyntheticClipSpec.model_validate_json((directory / SPEC_FILE).read_text())
    return ClipData(
        name=directory.name,
        frames=read_frames(directory / "frames"),
        masks=read_masks(directory / "masks"),
        flows_fwd=read_flows(directory / "flows_fwd"),
        flows_bwd=read_flows(directory / "flows_bwd"),
        spec=spec,
    )


def save_dataset(clips: Sequence[ClipData], root: Union[str, Path]) -> Path:
    root = Path(root)
    for clip in clips:
        save_clip(clip, root / clip.name)
    logger.info(f"Wrote {len(clips)} clips to {root}")
    return root


def load_dataset(root: Union[str, Path]) -> List[ClipData]:
    root = Path(root)
    folders = sorted(path for path in root.glob("clip_*") if path.is_dir())
    if not folders:
        raise FileNotFoundError(f"no clip_* folders under {root}")
    return [load_clip(folder) for folder in folders]


def split_dataset(clips: Sequence[ClipData], val_clips: int) -> Tuple[List[ClipData], List[ClipData]]:
    """The last ``val_clips`` clips are held out; at least one clip stays for training."""

    val_clips = min(val_clips, max(len(clips) - 1, 0))
    cut = len(clips) - val_clips
    return list(clips[:cut]), list(clips[cut:])


def lafc_samples(clips: Sequence[ClipData], config: RunConfig) -> List[LafcSample]:
    """Completion samples for every flow of every clip, in both directions."""

    samples: List[LafcSample] = []
    for clip in clips:
        samples.extend(
            make_lafc_samples(
                clip.frames,
                clip.flows_fwd,
                clip.flows_bwd,
                clip.masks,
                config.lafc.n,
                config.lafc.interval,
                flow_config=config.flow,
            )
        )
    return samples


def load_or_generate(config: RunConfig, data_dir: Optional[Union[str, Path]] = None) -> List[ClipData]:
    """Clips from ``data_dir`` if given, else generated in memory from ``config.data``."""

    if data_dir is not None:
        return load_dataset(data_dir)
    return generate_dataset(config.data, config.seed)


__all__ = [
    "ClipData",
    "random_clip_spec",
    "build_clip",
    "clip_seeds",
    "generate_dataset",
    "save_clip",
    "load_clip",
    "save_dataset",
    "load_dataset",
    "split_dataset",
    "lafc_samples",
    "load_or_generate",
]
