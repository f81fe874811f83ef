"""Versioned checkpoint blobs with an embedded configuration snapshot."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import torch
from torch import nn

from src.config import RunConfig
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
KINDS = ("lafc", "fgt")


@dataclass
class Checkpoint:
    """A loaded checkpoint: its kind, the config it was trained with and the weights."""

    kind: str
    config: RunConfig
    state_dicts: Dict[str, Dict[str, torch.Tensor]]
    meta: Dict[str, Any] = field(default_factory=dict)


def save_checkpoint(
    path: Union[str, Path],
    kind: str,
    config: RunConfig,
    modules: Mapping[str, nn.Module],
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write the state dicts of ``modules`` together with ``config``."""

    if kind not in KINDS:
        raise ConfigurationError(f"unknown checkpoint kind {kind!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = {
        "format_version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config.model_dump(mode="json"),
        "state_dicts": {name: module.state_dict() for name, module in modules.items()},
        "meta": dict(meta or {}),
    }
    torch.save(blob, path)
    logger.info(f"Saved {kind} checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path], kind: Optional[str] = None) -> Checkpoint:
    """Read a checkpoint, checking its format version and, optionally, its kind."""

    blob = torch.load(Path(path), map_location="cpu", weights_only=True)
    version = blob.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ConfigurationError(f"{path}: checkpoint format {version} is not supported (expected {CHECKPOINT_VERSION})")
    if kind is not None and blob.get("kind") != kind:
        raise ConfigurationError(f"{path}: expected a {kind} checkpoint, found {blob.get('kind')!r}")
    return Checkpoint(
        kind=blob["kind"],
        config=RunConfig.model_validate(blob["config"]),
        state_dicts=blob["state_dicts"],
        meta=blob.get("meta", {}),
    )


__all__ = ["CHECKPOINT_VERSION", "Checkpoint", "save_checkpoint", "load_checkpoint"]
