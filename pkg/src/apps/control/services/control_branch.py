"""Ветвь управления: обучаемая копия энкодера денойзера с нулевыми проекциями."""

import copy
import logging
import math
from typing import Sequence

import torch
from torch import nn

from ...diffusion.domain.entities import DenoiserBundle
from ...diffusion.services.unet import TinyUNet
from ..exceptions import ArchitectureMismatchError, EdgeDimensionMismatchError

logger = logging.getLogger(__name__)

ADAPTER_LAYERS = 3


def zero_module(module: nn.Module) -> nn.Module:
    for param in module.parameters():
        nn.init.zeros_(param)
    return module


def adapter_strides(factor: int) -> list[int]:
    """Шаги свёрток адаптера: log2(f) слоёв со stride 2, остальные со stride 1."""
    downs = int(round(math.log2(factor))) if factor >= 1 else -1
    if factor < 1 or 2**downs != factor or downs > ADAPTER_LAYERS:
        raise ArchitectureMismatchError(
            f"Коэффициент {factor} не поддерживается адаптером границ",
            details={"factor": factor},
        )
    return [2] * downs + [1] * (ADAPTER_LAYERS - downs)


def _encoder_signature(encoder: nn.Module) -> list[tuple[str, tuple[int, ...]]]:
    return [(name, tuple(t.shape)) for name, t in encoder.state_dict().items()]


class ControlBranch(nn.Module):
    """
    Копия энкодера и среднего блока, адаптер карты границ и
    по одной нулевой 1x1-проекции на точку внедрения.
    """

    def __init__(
        self,
        encoder: nn.Module,
        latent_channels: int,
        factor: int,
        adapter_width: int,
    ) -> None:
        super().__init__()
        self.encoder = encoder
        self.latent_channels = latent_channels
        self.factor = factor

        layers: list[nn.Module] = []
        in_channels = 1
        strides = adapter_strides(factor)
        for index, stride in enumerate(strides):
            last = index == len(strides) - 1
            out_channels = latent_channels if last else adapter_width
            conv = nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1)
            layers.append(zero_module(conv) if last else conv)
            if not last:
                layers.append(nn.SiLU())
            in_channels = out_channels
        self.edge_adapter = nn.Sequential(*layers)

        self.zero_projections = nn.ModuleList(
            zero_module(nn.Conv2d(channels, channels, 1))
            for channels in encoder.site_channels
        )

    @property
    def site_channels(self) -> list[int]:
        return list(self.encoder.site_channels)

    def forward(
        self,
        denoiser_input: torch.Tensor,
        edge_map: torch.Tensor,
        timesteps: torch.Tensor,
        context: torch.Tensor,
    ) -> list[torch.Tensor]:
        adapted = self.edge_adapter(edge_map.to(denoiser_input.dtype))
        z_t = denoiser_input[:, : self.latent_channels]
        if adapted.shape != z_t.shape:
            raise EdgeDimensionMismatchError(
                "Выход адаптера границ не совпадает с латентом",
                details={"adapter": list(adapted.shape), "latent": list(z_t.shape)},
            )
        x = torch.cat([z_t + adapted, denoiser_input[:, self.latent_channels :]], dim=1)
        h, skips, _ = self.encoder(x, timesteps, context)
        return [proj(f) for proj, f in zip(self.zero_projections, [*skips, h])]


def init_from_backbone(
    backbone: TinyUNet,
    latent_channels: int,
    factor: int = 1,
    adapter_width: int = 16,
) -> ControlBranch:
    """
    Создать ветвь из энкодера базового денойзера.

    Параметры энкодера копируются глубоко; базовая модель не меняется.

    Raises:
        ArchitectureMismatchError: Копия не совпадает с оригиналом
    """
    encoder = copy.deepcopy(backbone.encoder)
    if _encoder_signature(encoder) != _encoder_signature(backbone.encoder):
        raise ArchitectureMismatchError("Копия энкодера не совпадает с базовой моделью")
    for param in encoder.parameters():
        param.requires_grad_(True)
    branch = ControlBranch(encoder, latent_channels, factor, adapter_width)
    branch.to(next(backbone.parameters()).dtype)
    logger.info(
        "Ветвь управления создана: %d точек внедрения, %d параметров",
        len(branch.zero_projections),
        sum(p.numel() for p in branch.parameters()),
    )
    return branch


def control_features(
    branch: ControlBranch,
    edge_map: torch.Tensor,
    denoiser_input: torch.Tensor,
    context: torch.Tensor,
    timesteps: torch.Tensor,
) -> list[torch.Tensor]:
    """Признаки ветви по одному на точку внедрения (skip-входы декодера + средний блок)."""
    return branch(denoiser_input, edge_map, timesteps, context)


def check_compatible(branch: ControlBranch, backbone: TinyUNet) -> None:
    """
    Структурная проверка ветви против базового денойзера.

    Raises:
        ArchitectureMismatchError: Энкодеры или точки внедрения не совпадают
    """
    if _encoder_signature(branch.encoder) != _encoder_signature(backbone.encoder):
        raise ArchitectureMismatchError("Энкодер ветви не совпадает с энкодером денойзера")
    expected: Sequence[int] = backbone.encoder.site_channels
    if branch.site_channels != list(expected) or len(expected) != backbone.injection_sites:
        raise ArchitectureMismatchError(
            "Точки внедрения ветви не совпадают с декодером",
            details={"branch": branch.site_channels, "backbone": list(expected)},
        )


def attach(bundle: DenoiserBundle, branch: ControlBranch) -> DenoiserBundle:
    """Подключить ветвь к набору моделей после структурной проверки."""
    check_compatible(branch, bundle.denoiser)
    if branch.factor != bundle.spec.factor:
        raise ArchitectureMismatchError(
            "Коэффициент адаптера не совпадает с автокодировщиком",
            details={"branch": branch.factor, "autoencoder": bundle.spec.factor},
        )
    bundle.control = branch
    return bundle


def detach(bundle: DenoiserBundle) -> ControlBranch | None:
    branch = bundle.control
    bundle.control = None
    return branch
