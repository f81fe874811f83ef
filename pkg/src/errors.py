"""Exception types shared by the inpainting packages."""

from __future__ import annotations


class InpaintError(Exception):
    """Base class for every error raised by this project."""


class ShapeError(InpaintError, ValueError):
    """Tensors or sequences whose sizes do not agree."""


class FlowFormatError(InpaintError, ValueError):
    """A ``.flo`` file that does not follow the Middlebury layout."""


class ConfigurationError(InpaintError, ValueError):
    """Invalid configuration values or incompatible checkpoints."""


class EmptyRegionError(InpaintError, ValueError):
    """An operation that needs at least one pixel received an empty region."""


class NonFiniteError(InpaintError, FloatingPointError):
    """NaN or Inf showed up in a model output or a training loss."""


class ClipTooShortError(InpaintError, ValueError):
    """A clip has fewer frames than a temporal kernel needs."""

    def __init__(self, frames: int, minimum: int) -> None:
        super().__init__(f"clip has {frames} frames, at least {minimum} are required")
        self.frames = frames
        self.minimum = minimum


class StageError(InpaintError, RuntimeError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


__all__ = [
    "InpaintError",
    "ShapeError",
    "FlowFormatError",
    "ConfigurationError",
    "EmptyRegionError",
    "NonFiniteError",
    "ClipTooShortError",
    "StageError",
]
