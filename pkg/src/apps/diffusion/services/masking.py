"""Перенос маски в латентное пространство и маскированная функция потерь."""

import logging

import torch
import torch.nn.functional as F

from ..exceptions import MaskGeometryError, ShapeMismatchError

logger = logging.getLogger(__name__)


def downsample_mask(mask: torch.Tensor, factor: int) -> torch.Tensor:
    """
    Max-pool маски окнами factor x factor.

    Любой замаскированный пиксель помечает латентную ячейку.

    Args:
        mask: (H, W), (B, H, W) или (B, 1, H, W)
        factor: Коэффициент уменьшения автокодировщика

    Returns:
        Маска той же размерности на латентном разрешении

    Raises:
        MaskGeometryError: H или W не делятся на factor
    """
    height, width = mask.shape[-2:]
    if factor < 1 or height % factor or width % factor:
        raise MaskGeometryError(
            f"Размер маски {height}x{width} не делится на {factor}",
            details={"shape": [height, width], "factor": factor},
        )
    if factor == 1:
        return (mask > 0).to(mask.dtype if mask.is_floating_point() else torch.float32)

    original_dim = mask.dim()
    work = mask.float()
    while work.dim() < 4:
        work = work.unsqueeze(0)
    pooled = F.max_pool2d((work > 0).float(), kernel_size=factor, stride=factor)
    for _ in range(4 - original_dim):
        pooled = pooled.squeeze(0)
    return pooled


def _check_shapes(eps: torch.Tensor, eps_hat: torch.Tensor, latent_mask: torch.Tensor) -> torch.Tensor:
    if eps.shape != eps_hat.shape:
        raise ShapeMismatchError(
            "Формы eps и eps_hat различаются",
            details={"eps": list(eps.shape), "eps_hat": list(eps_hat.shape)},
        )
    mask = latent_mask
    while mask.dim() < eps.dim():
        mask = mask.unsqueeze(0) if mask.dim() < 3 else mask.unsqueeze(1)
    try:
        return torch.broadcast_to(mask > 0, eps.shape)
    except RuntimeError as exc:
        raise ShapeMismatchError(
            "Маска не согласуется с латентом",
            details={"mask": list(latent_mask.shape), "latent": list(eps.shape)},
        ) from exc


def masked_mse_per_item(
    eps: torch.Tensor,
    eps_hat: torch.Tensor,
    latent_mask: torch.Tensor,
) -> torch.Tensor:
    """Среднее квадратов разностей по маскированным ячейкам каждого элемента (B,)."""
    if eps.dim() <= 2:
        # Одиночный латент без оси батча
        eps, eps_hat = eps.unsqueeze(0), eps_hat.unsqueeze(0)
        latent_mask = latent_mask.unsqueeze(0) if latent_mask.dim() == eps.dim() - 1 else latent_mask
    mask = _check_shapes(eps, eps_hat, latent_mask)
    squared = torch.where(mask, (eps - eps_hat) ** 2, torch.zeros_like(eps))
    reduce_dims = tuple(range(1, eps.dim()))
    counts = mask.sum(dim=reduce_dims)
    sums = squared.sum(dim=reduce_dims)
    return torch.where(counts > 0, sums / counts.clamp(min=1), torch.zeros_like(sums))


def masked_mse(
    eps: torch.Tensor,
    eps_hat: torch.Tensor,
    latent_mask: torch.Tensor,
) -> torch.Tensor:
    """
    Маскированная MSE: среднее по ячейкам маски, затем по батчу.

    Args:
        eps: Истинный шум (B, C, h, w)
        eps_hat: Предсказанный шум той же формы
        latent_mask: Латентная маска (B, 1, h, w) или (h, w)

    Returns:
        Скаляр; пустая маска даёт 0 с предупреждением

    Raises:
        ShapeMismatchError: Формы не согласованы
    """
    per_item = masked_mse_per_item(eps, eps_hat, latent_mask)
    if not bool((latent_mask > 0).any()):
        logger.warning("Пустая латентная маска: потеря равна 0")
    return per_item.mean()
