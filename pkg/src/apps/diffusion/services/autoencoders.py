"""Автокодировщики изображение <-> латент."""

import torch
import torch.nn.functional as F
from torch import nn

from ..domain.value_objects import ModelSpec
from ..exceptions import MaskGeometryError, ShapeMismatchError


def _check_channels(images: torch.Tensor, expected: int) -> None:
    if images.shape[1] != expected:
        raise ShapeMismatchError(
            f"Автокодировщик ждёт {expected} каналов, получено {images.shape[1]}",
            details={"channels": int(images.shape[1]), "expected": expected},
        )


class IdentityAutoencoder(nn.Module):
    """Диффузия в пространстве пикселей: f = 1, канал повторяется latent_channels раз."""

    def __init__(self, latent_channels: int = 3, image_channels: int = 3) -> None:
        super().__init__()
        self.factor = 1
        self.latent_channels = latent_channels
        self.image_channels = image_channels

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        _check_channels(images, self.image_channels)
        gray = images.mean(dim=1, keepdim=True)
        return gray.repeat(1, self.latent_channels, 1, 1)

    def decode(self, latents: torch.Tensor) -> torch.Tensor:
        return latents.mean(dim=1, keepdim=True).repeat(1, self.image_channels, 1, 1)


class PoolingAutoencoder(nn.Module):
    """Безвесовый автокодировщик: усреднение окнами f x f и nearest-повышение."""

    def __init__(self, factor: int = 8, latent_channels: int = 4, image_channels: int = 3) -> None:
        super().__init__()
        if factor < 1:
            raise ShapeMismatchError(f"Коэффициент должен быть >= 1, получено {factor}")
        self.factor = factor
        self.latent_channels = latent_channels
        self.image_channels = image_channels

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        _check_channels(images, self.image_channels)
        height, width = images.shape[-2:]
        if height % self.factor or width % self.factor:
            raise MaskGeometryError(
                f"Размер {height}x{width} не делится на {self.factor}",
                details={"factor": self.factor},
            )
        gray = images.mean(dim=1, keepdim=True)
        pooled = F.avg_pool2d(gray, kernel_size=self.factor, stride=self.factor)
        return pooled.repeat(1, self.latent_channels, 1, 1)

    def decode(self, latents: torch.Tensor) -> torch.Tensor:
        gray = latents.mean(dim=1, keepdim=True)
        upsampled = F.interpolate(gray, scale_factor=self.factor, mode="nearest")
        return upsampled.repeat(1, self.image_channels, 1, 1)


def build_autoencoder(spec: ModelSpec) -> nn.Module:
    """
    Автокодировщик по спецификации модели.

    Raises:
        ShapeMismatchError: Неизвестный тип или несогласованный коэффициент
    """
    if spec.autoencoder == "identity":
        if spec.factor != 1:
            raise ShapeMismatchError("Тождественный автокодировщик требует factor = 1")
        return IdentityAutoencoder(spec.latent_channels, spec.image_channels)
    if spec.autoencoder == "pooling":
        return PoolingAutoencoder(spec.factor, spec.latent_channels, spec.image_channels)
    raise ShapeMismatchError(
        f"Неизвестный автокодировщик: {spec.autoencoder}",
        details={"autoencoder": spec.autoencoder},
    )
