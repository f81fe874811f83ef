"""Environment-driven settings and the structured run configuration.

Environment variables (optionally from a ``.env`` file) pick the device,
log level, seed and default directories. Everything about the models, losses
and schedules lives in :class:`RunConfig`, which is read from a sectioned
``key = value`` text file and can be overridden one key at a time.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigurationError

try:  # pragma: no cover - optional dependency
    from dotenv import load_dotenv
except ModuleNotFoundError:  # pragma: no cover - optional dependency
    def load_dotenv(*_args: object, **_kwargs: object) -> bool:
        """Fallback ``load_dotenv`` implementation when python-dotenv is absent."""

        return False


def _load_environment() -> None:
    """Load configuration variables from a ``.env`` file if available."""

    load_dotenv()


_load_environment()

DEVICE: str = os.getenv("INPAINT_DEVICE", "cpu")
LOG_LEVEL: str = os.getenv("INPAINT_LOG_LEVEL", "INFO")
DATA_ROOT: Path = Path(os.getenv("INPAINT_DATA_ROOT", "data"))
RUNS_ROOT: Path = Path(os.getenv("INPAINT_RUNS_ROOT", "runs"))
SEED: int = int(os.getenv("INPAINT_SEED", "0"))


def _parse_pair(value: object) -> object:
    """Accept ``"8,8"`` or ``"8"`` for integer pairs."""

    if isinstance(value, str):
        parts = [part.strip() for part in value.split(",") if part.strip()]
        if len(parts) == 1:
            return (int(parts[0]), int(parts[0]))
        return tuple(int(part) for part in parts)
    if isinstance(value, int):
        return (value, value)
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class FlowConfig(_Section):
    """Geometric primitives: consistency threshold, Canny thresholds, fill tolerance."""

    tau: float = Field(0.5, ge=0)
    canny_low: float = Field(0.1, ge=0)
    canny_high: float = Field(0.2, ge=0)
    canny_sigma: float = Field(1.0, gt=0)
    fill_tolerance: float = Field(1e-4, gt=0)

    @model_validator(mode="after")
    def thresholds_ordered(self) -> "FlowConfig":
        if self.canny_low > self.canny_high:
            raise ValueError("canny_low must not exceed canny_high")
        return self


class LafcConfig(_Section):
    """Flow completion network and its loss weights."""

    n: int = Field(1, ge=0)
    interval: int = Field(3, ge=1)
    base_channels: int = Field(32, ge=1)
    encoder_stages: int = Field(3, ge=1)
    edge_channels: int = Field(32, ge=1)
    hole_weight: float = Field(1.0, ge=0)
    valid_weight: float = Field(1.0, ge=0)
    smooth1_weight: float = Field(0.1, ge=0)
    smooth2_weight: float = Field(0.1, ge=0)
    warp_weight: float = Field(0.1, ge=0)
    edge_weight: float = Field(1.0, ge=0)

    @property
    def window_length(self) -> int:
        return 2 * self.n + 1


class FgtConfig(_Section):
    """Flow-guided transformer architecture and training objective."""

    dim: int = Field(512, ge=1)
    flow_dim: int = Field(512, ge=1)
    heads: int = Field(4, ge=1)
    mlp_ratio: float = Field(2.0, gt=0)
    blocks: str = "TSTSTSTS"
    zones: int = Field(2, ge=1)
    window: Tuple[int, int] = (8, 8)
    global_stride: int = Field(4, ge=1)
    global_kernel: Optional[int] = None
    use_global_tokens: bool = True
    flow_guidance: Literal["none", "concat", "reweight"] = "reweight"
    embed_channels: int = Field(64, ge=1)
    hole_weight: float = Field(1.0, ge=0)
    valid_weight: float = Field(1.0, ge=0)
    adversarial_weight: float = Field(0.01, ge=0)
    disc_channels: int = Field(64, ge=1)

    @field_validator("window", mode="before")
    @classmethod
    def window_pair(cls, value: object) -> object:
        return _parse_pair(value)

    @field_validator("blocks")
    @classmethod
    def block_letters(cls, value: str) -> str:
        value = value.strip().upper()
        if not value or set(value) - {"T", "S"}:
            raise ValueError("blocks must be a non-empty string over {T, S}")
        return value

    @model_validator(mode="after")
    def heads_divide(self) -> "FgtConfig":
        if self.dim % self.heads:
            raise ValueError(f"heads ({self.heads}) must divide dim ({self.dim})")
        if min(self.window) < 1:
            raise ValueError("window sides must be positive")
        return self

    @property
    def kernel(self) -> int:
        return self.global_kernel if self.global_kernel is not None else 2 * self.global_stride


class PropagationConfig(_Section):
    """Content propagation; ``max_passes`` of 0 means one pass per frame.

    With ``enabled`` off the pipeline hands every hole to the transformer.
    """

    enabled: bool = True
    max_passes: int = Field(0, ge=0)


class TrainConfig(_Section):
    """Optimizer schedule shared by both trainers."""

    iterations: int = Field(2000, ge=1)
    learning_rate: float = Field(1e-4, gt=0)
    milestone_fraction: float = Field(120 / 280, gt=0, le=1)
    gamma: float = Field(0.1, gt=0)
    log_interval: int = Field(100, ge=1)
    batch_size: int = Field(1, ge=1)

    @property
    def milestone(self) -> int:
        return max(1, round(self.iterations * self.milestone_fraction))


class FgtTrainConfig(TrainConfig):
    """Transformer schedule: the milestone sits at 300/500 of the run."""

    iterations: int = Field(3000, ge=1)
    milestone_fraction: float = Field(300 / 500, gt=0, le=1)


class DataConfig(_Section):
    """Synthetic clip generation."""

    num_clips: int = Field(16, ge=1)
    val_clips: int = Field(4, ge=0)
    num_frames: int = Field(8, ge=2)
    height: int = Field(64, ge=8)
    width: int = Field(64, ge=8)
    num_sprites: int = Field(2, ge=0)
    max_speed: float = Field(3.0, ge=0)
    pan_speed: float = Field(0.0, ge=0)
    integer_motion: bool = True
    mask_kind: Literal["square", "object"] = "square"
    mask_coverage: float = Field(1 / 16, gt=0, lt=1)
    mask_step: float = Field(2.0, ge=0)


class RunConfig(_Section):
    """Every hyperparameter of a run, grouped by concern."""

    seed: int = SEED
    device: str = DEVICE
    flow: FlowConfig = Field(default_factory=FlowConfig)
    lafc: LafcConfig = Field(default_factory=LafcConfig)
    fgt: FgtConfig = Field(default_factory=FgtConfig)
    propagation: PropagationConfig = Field(default_factory=PropagationConfig)
    lafc_train: TrainConfig = Field(default_factory=TrainConfig)
    fgt_train: FgtTrainConfig = Field(default_factory=FgtTrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)

    def to_text(self) -> str:
        """Render the configuration in the sectioned ``key = value`` format."""

        lines: List[str] = ["[run]", f"seed = {self.seed}", f"device = {self.device}"]
        for name in SECTIONS:
            lines.append("")
            lines.append(f"[{name}]")
            for key, value in getattr(self, name).model_dump().items():
                if value is None:
                    continue
                if isinstance(value, (tuple, list)):
                    value = ",".join(str(v) for v in value)
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


SECTIONS: Tuple[str, ...] = ("flow", "lafc", "fgt", "propagation", "lafc_train", "fgt_train", "data")

Override = Union[str, Tuple[str, str]]


def _split_override(item: Override) -> Tuple[str, str, str]:
    """Split ``section.key=value`` into its parts."""

    if isinstance(item, tuple):
        dotted, value = item
    else:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} must look like section.key=value")
        dotted, value = item.split("=", 1)
    dotted = dotted.strip()
    section, _, key = dotted.rpartition(".")
    return section or "run", key, value.strip()


def build_config(values: Mapping[str, Mapping[str, object]]) -> RunConfig:
    """Validate nested ``{section: {key: value}}`` data into a :class:`RunConfig`."""

    data: Dict[str, object] = {}
    for section, entries in values.items():
        if section == "run":
            data.update(entries)
        elif section in SECTIONS:
            data[section] = dict(entries)
        else:
            raise ConfigurationError(f"unknown config section [{section}]")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Iterable[Override] = ()) -> RunConfig:
    """Read a config file (optional), apply ``section.key=value`` overrides and validate."""

    values: Dict[str, Dict[str, object]] = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str  # keep key case
        if not parser.read(path):
            raise ConfigurationError(f"config file {path} could not be read")
        for section in parser.sections():
            values[section] = dict(parser.items(section))
    for item in overrides:
        section, key, value = _split_override(item)
        values.setdefault(section, {})[key] = value
    return build_config(values)


__all__: Iterable[str] = (
    "DEVICE",
    "LOG_LEVEL",
    "DATA_ROOT",
    "RUNS_ROOT",
    "SEED",
    "FlowConfig",
    "LafcConfig",
    "FgtConfig",
    "PropagationConfig",
    "TrainConfig",
    "FgtTrainConfig",
    "DataConfig",
    "RunConfig",
    "SECTIONS",
    "build_config",
    "load_run_config",
)
