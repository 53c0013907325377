"""Схема файла конфигурации запуска (TOML)."""

from enum import Enum
from pathlib import Path
from typing import Literal, Optional

import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.files import canonical_json, sha256_bytes

from ..dataset.domain.value_objects import PreprocessParams
from ..diffusion.domain.value_objects import ModelSpec, ScheduleKind, Stage
from ..edges.domain.value_objects import CannyParams
from ..inference.domain.value_objects import AUTO_MASK, DEFAULT_STEPS, EdgeMode
from ..metrics.domain.value_objects import DetectorParams
from ..prompts.domain.value_objects import MAX_TOKENS, SIZE_RANGE
from ..training.domain.value_objects import TrainConfig


class Preset(str, Enum):
    desk = "desk"    # CPU, срезы 64x64, малая модель
    paper = "paper"  # Полный масштаб: 512x512, размеры SD 1.5


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsSection(Section):
    data_root: Path = Path("data/phantoms")
    cache_dir: Path = Path("artifacts/cache")
    checkpoint_dir: Path = Path("artifacts/checkpoints")
    output_dir: Path = Path("artifacts/reconstructions")
    report_dir: Path = Path("artifacts/reports")


class PhantomsSection(Section):
    subjects: int = Field(12, ge=2)
    shape: tuple[int, int, int] = (64, 64, 16)
    tumor_share: float = Field(0.75, ge=0.0, le=1.0)


class PreprocessSection(Section):
    slice_lo: int = Field(80, ge=0)
    slice_hi: int = Field(130, ge=0)
    clip_percentile: float = Field(99.5, gt=0.0, le=100.0)
    pad_to: int = Field(256, gt=0)
    out_size: int = Field(512, gt=0)
    # Категории размера в подсказках определены только на SIZE_RANGE
    tumor_min: int = Field(SIZE_RANGE[0], ge=SIZE_RANGE[0], le=SIZE_RANGE[1])
    tumor_max: int = Field(SIZE_RANGE[1], ge=SIZE_RANGE[0], le=SIZE_RANGE[1])
    dilation_radius: int = Field(5, ge=0)
    area_scale: float = Field(1.0, gt=0.0)
    split_ratio: float = Field(0.9, gt=0.0, lt=1.0)
    split_tolerance: float = Field(0.02, ge=0.0)
    workers: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "PreprocessSection":
        if self.slice_lo >= self.slice_hi:
            raise ValueError(f"slice_lo ({self.slice_lo}) должен быть меньше slice_hi ({self.slice_hi})")
        if self.tumor_min > self.tumor_max:
            raise ValueError(f"tumor_min ({self.tumor_min}) больше tumor_max ({self.tumor_max})")
        return self

    def to_params(self) -> PreprocessParams:
        return PreprocessParams(**self.model_dump(exclude={"workers"}))


class EdgesSection(Section):
    kernel: int = Field(5, ge=1)
    sigma: float = Field(1.0, gt=0.0)
    low: float = Field(30.0, ge=0.0)
    high: float = Field(80.0, ge=0.0)

    @field_validator("kernel")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("размер ядра должен быть нечётным")
        return value

    @model_validator(mode="after")
    def _check_thresholds(self) -> "EdgesSection":
        if self.low >= self.high:
            raise ValueError(f"low ({self.low}) должен быть меньше high ({self.high})")
        return self

    def to_params(self) -> CannyParams:
        return CannyParams(**self.model_dump())


class PromptsSection(Section):
    max_tokens: int = MAX_TOKENS

    @field_validator("max_tokens")
    @classmethod
    def _fixed_length(cls, value: int) -> int:
        if value != MAX_TOKENS:
            raise ValueError(f"поддерживается только длина {MAX_TOKENS}")
        return value


class ModelSection(Section):
    image_channels: int = Field(3, ge=1)
    latent_channels: int = Field(3, ge=1)
    autoencoder: Literal["identity", "pooling"] = "identity"
    factor: Literal[1, 2, 4, 8] = 1
    base_width: int = Field(32, ge=8)
    channel_mult: tuple[int, ...] = (1, 2)
    context_dim: int = Field(64, ge=1)
    attention_heads: int = Field(4, ge=1)
    tokenizer: Literal["template", "clip"] = "template"
    text_encoder: Literal["template", "clip"] = "template"
    pretrained_text: str = ""
    adapter_width: int = Field(16, ge=1)
    dtype: Literal["float32", "float64"] = "float32"

    @model_validator(mode="after")
    def _check_model(self) -> "ModelSection":
        if not self.channel_mult or any(m < 1 for m in self.channel_mult):
            raise ValueError("channel_mult должен быть непустым списком положительных чисел")
        if self.context_dim % self.attention_heads:
            raise ValueError(
                f"context_dim ({self.context_dim}) не делится на attention_heads ({self.attention_heads})"
            )
        if "clip" in (self.tokenizer, self.text_encoder) and not self.pretrained_text:
            raise ValueError("для CLIP нужен pretrained_text")
        return self

    @property
    def torch_dtype(self) -> torch.dtype:
        return getattr(torch, self.dtype)

    def to_spec(self) -> ModelSpec:
        return ModelSpec(**self.model_dump(exclude={"dtype"}))


class ScheduleSection(Section):
    T: int = Field(1000, ge=1)
    kind: ScheduleKind = ScheduleKind.linear_beta


class StageSection(Section):
    batch_size: int = Field(8, ge=1)
    grad_accum: int = Field(4, ge=1)
    epochs: int = Field(30, ge=1)
    lr: float = Field(5e-5, gt=0.0)
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = Field(0.01, ge=0.0)
    warmup_steps: int = Field(0, ge=0)
    grad_clip: float = Field(1.0, gt=0.0)
    max_steps: Optional[int] = Field(None, ge=1)
    num_workers: int = Field(0, ge=0)


class InferenceSection(Section):
    steps: int = Field(DEFAULT_STEPS, ge=1)
    edge_mode: EdgeMode = EdgeMode.mirrored
    checkpoint: Optional[Path] = None
    input: Optional[str] = None
    mask: Optional[Path] = None
    limit: Optional[int] = Field(None, ge=1)
    difference_map: bool = True

    @field_validator("mask", mode="before")
    @classmethod
    def _auto_mask(cls, value: object) -> object:
        if isinstance(value, str) and value.strip().lower() == AUTO_MASK:
            return None
        return value


class MetricsSection(Section):
    extractor: str = "histogram"
    detector: str = "threshold"
    patch: int = Field(20, ge=1)
    percentile: float = Field(99.0, gt=0.0, le=100.0)
    margin: float = 0.0
    generated: Optional[Path] = None
    reference: Optional[Path] = None
    report_name: str = "report.json"
    csv: bool = True

    def detector_params(self) -> DetectorParams:
        return DetectorParams(patch=self.patch, percentile=self.percentile, margin=self.margin)


class RunConfig(Section):
    """Полная конфигурация запуска; один файл управляет всеми командами."""

    preset: Preset = Preset.desk
    seed: int = Field(0, ge=0)
    paths: PathsSection = Field(default_factory=PathsSection)
    phantoms: PhantomsSection = Field(default_factory=PhantomsSection)
    preprocess: PreprocessSection = Field(default_factory=PreprocessSection)
    edges: EdgesSection = Field(default_factory=EdgesSection)
    prompts: PromptsSection = Field(default_factory=PromptsSection)
    model: ModelSection = Field(default_factory=ModelSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    stage1: StageSection = Field(default_factory=StageSection)
    stage2: StageSection = Field(
        default_factory=lambda: StageSection(epochs=20, lr=5e-4, warmup_steps=500)
    )
    inference: InferenceSection = Field(default_factory=InferenceSection)
    metrics: MetricsSection = Field(default_factory=MetricsSection)

    @model_validator(mode="after")
    def _check_geometry(self) -> "RunConfig":
        downscale = self.model.factor * 2 ** (len(self.model.channel_mult) - 1)
        if self.preprocess.out_size % downscale:
            raise ValueError(
                f"out_size ({self.preprocess.out_size}) не делится на {downscale} "
                "(factor автокодировщика x понижения U-Net)"
            )
        return self

    def train_config(self, stage: Stage) -> TrainConfig:
        section = self.stage1 if stage is Stage.stage1 else self.stage2
        return TrainConfig(stage=stage, seed=self.seed, **section.model_dump())

    def to_document(self) -> dict:
        return self.model_dump(mode="json")

    @property
    def config_hash(self) -> str:
        return sha256_bytes(canonical_json(self.to_document()).encode("utf-8"))
