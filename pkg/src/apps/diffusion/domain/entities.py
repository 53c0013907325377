"""Доменные сущности диффузионного ядра."""

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
import torch
from torch import nn

from ..exceptions import ScheduleError, ShapeMismatchError
from .value_objects import ModelSpec, ScheduleKind, Stage


@dataclass(frozen=True)
class NoiseSchedule:
    """Кумулятивные коэффициенты сигнала alpha_bar[0..T], alpha_bar[0] = 1."""

    T: int
    alpha_bar: np.ndarray
    kind: ScheduleKind = ScheduleKind.linear_beta

    def __post_init__(self) -> None:
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        if ab.shape != (self.T + 1,):
            raise ScheduleError(
                f"Ожидалось {self.T + 1} коэффициентов, получено {ab.shape}",
            )
        if ab[0] != 1.0:
            raise ScheduleError("alpha_bar[0] должен быть равен 1")
        if np.any(ab <= 0) or np.any(np.diff(ab) >= 0):
            raise ScheduleError("alpha_bar должен строго убывать и оставаться положительным")
        object.__setattr__(self, "alpha_bar", ab)

    def at(self, t: torch.Tensor | int, like: Optional[torch.Tensor] = None) -> torch.Tensor:
        """alpha_bar для шагов t в dtype/device тензора like."""
        dtype = like.dtype if like is not None else torch.float64
        device = like.device if like is not None else None
        table = torch.as_tensor(self.alpha_bar, dtype=dtype, device=device)
        index = torch.as_tensor(t, device=table.device, dtype=torch.long)
        return table[index]

    def to_dict(self) -> dict:
        return {"T": self.T, "kind": self.kind.value}


@dataclass
class ConditioningPack:
    """
    Условия одного шага денойзера для батча.

    tokens: (B, 77) идентификаторы; timesteps: (B,) в [1, T];
    latent_mask: (B, 1, h, w); masked_latent: (B, C, h, w);
    edge_map: (B, 1, H, W) или None.
    """

    tokens: torch.Tensor
    timesteps: torch.Tensor
    latent_mask: torch.Tensor
    masked_latent: torch.Tensor
    edge_map: Optional[torch.Tensor] = None

    @property
    def batch_size(self) -> int:
        return int(self.tokens.shape[0])

    def at_timestep(self, t: int) -> "ConditioningPack":
        timesteps = torch.full_like(self.timesteps, int(t))
        return replace(self, timesteps=timesteps)

    def without_edges(self) -> "ConditioningPack":
        return replace(self, edge_map=None)

    def validate(self, latent_shape: tuple[int, ...], T: Optional[int] = None) -> None:
        """
        Проверить инварианты пакета.

        Raises:
            ShapeMismatchError: Нарушены размеры или диапазон шагов
        """
        if T is not None and self.timesteps.numel() and (
            int(self.timesteps.min()) < 1 or int(self.timesteps.max()) > T
        ):
            raise ShapeMismatchError(
                f"Шаги диффузии вне [1, {T}]",
                details={"min": int(self.timesteps.min()), "max": int(self.timesteps.max())},
            )
        if tuple(self.latent_mask.shape[-2:]) != tuple(latent_shape[-2:]):
            raise ShapeMismatchError(
                "Размер латентной маски не совпадает с латентом",
                details={
                    "mask": list(self.latent_mask.shape),
                    "latent": list(latent_shape),
                },
            )


DEFAULT_FREEZE_FLAGS = {
    "autoencoder": True,
    "text_encoder": True,
    "denoiser": False,
    "control": False,
}


@dataclass
class DenoiserBundle:
    """Автокодировщик + текстовый кодировщик + денойзер + ветвь управления."""

    autoencoder: nn.Module
    text_encoder: nn.Module
    denoiser: nn.Module
    tokenizer: Any
    spec: ModelSpec
    control: Optional[nn.Module] = None
    freeze_flags: dict[str, bool] = field(default_factory=lambda: dict(DEFAULT_FREEZE_FLAGS))

    def components(self) -> dict[str, nn.Module]:
        parts = {
            "autoencoder": self.autoencoder,
            "text_encoder": self.text_encoder,
            "denoiser": self.denoiser,
        }
        if self.control is not None:
            parts["control"] = self.control
        return parts

    def apply_freeze(self) -> None:
        """Выставить requires_grad согласно флагам заморозки."""
        for name, module in self.components().items():
            frozen = self.freeze_flags.get(name, False)
            for param in module.parameters():
                param.requires_grad_(not frozen)

    def trainable_parameters(self) -> list[nn.Parameter]:
        return [
            p
            for name, module in self.components().items()
            if not self.freeze_flags.get(name, False)
            for p in module.parameters()
        ]

    def to(self, dtype: torch.dtype) -> "DenoiserBundle":
        for module in self.components().values():
            module.to(dtype)
        return self


@dataclass
class LoadedCheckpoint:
    """Результат чтения чекпойнта."""

    bundle: DenoiserBundle
    schedule: NoiseSchedule
    stage: Stage
    config_hash: str
    content_hash: str
    parent_hash: Optional[str] = None
