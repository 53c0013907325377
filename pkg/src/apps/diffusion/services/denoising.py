"""Сборка набора моделей, подготовка условий и предсказание шума."""

import logging
from typing import Optional

import torch

from ...control.services.control_branch import control_features
from ...prompts.services.tokenizer import build_tokenizer
from ..domain.entities import ConditioningPack, DenoiserBundle
from ..domain.value_objects import ModelSpec
from ..exceptions import ControlBranchMissingError, ShapeMismatchError
from .autoencoders import build_autoencoder
from .masking import downsample_mask
from .text_encoders import build_text_encoder
from .unet import build_denoiser

logger = logging.getLogger(__name__)


def build_bundle(spec: ModelSpec, seed: int = 0, dtype: torch.dtype = torch.float32) -> DenoiserBundle:
    """
    Собрать автокодировщик, текстовый кодировщик и денойзер.

    Инициализация весов детерминирована seed и не затрагивает
    глобальный генератор torch.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        tokenizer = build_tokenizer(spec.tokenizer, spec.pretrained_text)
        autoencoder = build_autoencoder(spec)
        text_encoder = build_text_encoder(spec, tokenizer.vocab_size)
        denoiser = build_denoiser(spec)
    bundle = DenoiserBundle(
        autoencoder=autoencoder,
        text_encoder=text_encoder,
        denoiser=denoiser,
        tokenizer=tokenizer,
        spec=spec,
    )
    bundle.to(dtype)
    bundle.apply_freeze()
    logger.info(
        "Собран денойзер: %d параметров, латент %d каналов, f=%d",
        sum(p.numel() for p in denoiser.parameters()),
        spec.latent_channels,
        spec.factor,
    )
    return bundle


def masked_images(images: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
    """Обнулить пиксели маски (значения в [-1, 1])."""
    return torch.where(masks > 0, torch.zeros_like(images), images)


def replicate_channels(images: torch.Tensor, channels: int) -> torch.Tensor:
    """
    Повторить одноканальный срез до числа каналов входа модели.

    Кэш хранит один канал; копии создаются только на входе автокодировщика.

    Raises:
        ShapeMismatchError: Число каналов не 1 и не равно channels
    """
    if images.shape[1] == channels:
        return images
    if images.shape[1] != 1:
        raise ShapeMismatchError(
            f"Нельзя привести {images.shape[1]} каналов к {channels}",
            details={"channels": int(images.shape[1]), "expected": channels},
        )
    return images.repeat(1, channels, 1, 1)


def prepare_conditioning(
    bundle: DenoiserBundle,
    images: torch.Tensor,
    masks: torch.Tensor,
    tokens: torch.Tensor,
    timesteps: torch.Tensor,
    edge_map: Optional[torch.Tensor] = None,
) -> tuple[torch.Tensor, ConditioningPack]:
    """
    Латент полного изображения и пакет условий для батча.

    Args:
        images: (B, 1, H, W) в [-1, 1]
        masks: (B, 1, H, W) бинарная маска инпейнтинга
        tokens: (B, 77)
        timesteps: (B,)
        edge_map: (B, 1, H, W) или None

    Returns:
        (z0, pack)
    """
    channels = bundle.spec.image_channels
    with torch.no_grad():
        z0 = bundle.autoencoder.encode(replicate_channels(images, channels))
        masked_latent = bundle.autoencoder.encode(
            replicate_channels(masked_images(images, masks), channels)
        )
    latent_mask = downsample_mask(masks, bundle.spec.factor).to(z0.dtype)
    pack = ConditioningPack(
        tokens=tokens,
        timesteps=timesteps,
        latent_mask=latent_mask,
        masked_latent=masked_latent,
        edge_map=edge_map,
    )
    return z0, pack


def denoiser_input(z_t: torch.Tensor, pack: ConditioningPack) -> torch.Tensor:
    return torch.cat(
        [z_t, pack.latent_mask.to(z_t.dtype), pack.masked_latent.to(z_t.dtype)],
        dim=1,
    )


def predict_noise(bundle: DenoiserBundle, z_t: torch.Tensor, pack: ConditioningPack) -> torch.Tensor:
    """
    eps_theta(z_t, p, t[, c]).

    Raises:
        ControlBranchMissingError: Передана карта границ без ветви управления
        ShapeMismatchError: Размеры латента несовместимы с денойзером
    """
    if pack.edge_map is not None and bundle.control is None:
        raise ControlBranchMissingError("Карта границ передана, но ветвь управления не подключена")
    pack.validate(tuple(z_t.shape))
    downscale = getattr(bundle.denoiser, "downscale", 1)
    if z_t.shape[-1] % downscale or z_t.shape[-2] % downscale:
        raise ShapeMismatchError(
            f"Латент {tuple(z_t.shape[-2:])} не делится на {downscale}",
            details={"latent": list(z_t.shape)},
        )

    context = bundle.text_encoder(pack.tokens)
    x = denoiser_input(z_t, pack)
    control = None
    if pack.edge_map is not None:
        control = control_features(bundle.control, pack.edge_map, x, context, pack.timesteps)
    eps_hat = bundle.denoiser(x, pack.timesteps, context, control)
    if eps_hat.shape != z_t.shape:
        raise ShapeMismatchError(
            "Выход денойзера не совпадает с формой латента",
            details={"eps_hat": list(eps_hat.shape), "z_t": list(z_t.shape)},
        )
    return eps_hat
