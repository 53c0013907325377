"""Value Objects диффузионного ядра."""

from dataclasses import asdict, dataclass, field
from enum import Enum


class ScheduleKind(str, Enum):
    linear_beta = "linear_beta"
    cosine = "cosine"


class Stage(str, Enum):
    stage1 = "stage1"  # Дообучение инпейнтинга
    stage2 = "stage2"  # Обучение ветви управления


LINEAR_BETA_START = 1e-4
LINEAR_BETA_END = 2e-2
COSINE_OFFSET = 0.008
COSINE_MAX_BETA = 0.999


@dataclass(frozen=True)
class ModelSpec:
    """Размеры компонентов модели (Value Object)."""

    image_channels: int = 3
    latent_channels: int = 3
    autoencoder: str = "identity"
    factor: int = 1
    base_width: int = 32
    channel_mult: tuple[int, ...] = field(default=(1, 2))
    context_dim: int = 64
    attention_heads: int = 4
    tokenizer: str = "template"
    text_encoder: str = "template"
    pretrained_text: str = ""
    adapter_width: int = 16

    @property
    def denoiser_in_channels(self) -> int:
        # z_t + маска + латент замаскированного изображения
        return 2 * self.latent_channels + 1

    def to_dict(self) -> dict:
        data = asdict(self)
        data["channel_mult"] = list(self.channel_mult)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        data = dict(data)
        data["channel_mult"] = tuple(data.get("channel_mult", (1, 2)))
        return cls(**data)
