"""Seeding, device selection and finiteness checks used by every trainer."""

from __future__ import annotations

import logging
import random

import numpy as np
import torch

from src.errors import NonFiniteError

logger = logging.getLogger(__name__)


def seed_everything(seed: int) -> torch.Generator:
    """Seed python, numpy and torch and return a torch generator seeded the same way."""

    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator


def resolve_device(name: str) -> torch.device:
    """Turn a device name into a ``torch.device``, falling back to CPU."""

    if name.startswith("cuda") and not torch.cuda.is_available():
        logger.warning(f"Device {name} requested but CUDA is unavailable; using cpu")
        return torch.device("cpu")
    return torch.device(name)


def check_finite(tensor: torch.Tensor, what: str) -> torch.Tensor:
    """Raise ``NonFiniteError`` naming ``what`` when the tensor holds NaN or Inf."""

    if not torch.isfinite(tensor).all():
        raise NonFiniteError(f"non-finite values in {what}")
    return tensor


__all__ = ["seed_everything", "resolve_device", "check_finite"]
