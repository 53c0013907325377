"""Расписание шума и прямой процесс диффузии."""

import logging

import numpy as np
import torch

from ..domain.entities import NoiseSchedule
from ..domain.value_objects import (
    COSINE_MAX_BETA,
    COSINE_OFFSET,
    LINEAR_BETA_END,
    LINEAR_BETA_START,
    ScheduleKind,
)
from ..exceptions import ScheduleError, ShapeMismatchError

logger = logging.getLogger(__name__)


def _linear_betas(T: int) -> np.ndarray:
    if T == 1:
        return np.array([LINEAR_BETA_START], dtype=np.float64)
    return np.linspace(LINEAR_BETA_START, LINEAR_BETA_END, T, dtype=np.float64)


def _cosine_betas(T: int) -> np.ndarray:
    steps = np.arange(T + 1, dtype=np.float64) / T
    f = np.cos((steps + COSINE_OFFSET) / (1 + COSINE_OFFSET) * np.pi / 2) ** 2
    ratio = f[1:] / f[:-1]
    return np.clip(1.0 - ratio, 0.0, COSINE_MAX_BETA)


def make_schedule(T: int, kind: ScheduleKind | str = ScheduleKind.linear_beta) -> NoiseSchedule:
    """
    Построить расписание alpha_bar[0..T].

    Args:
        T: Число шагов диффузии
        kind: linear_beta (beta от 1e-4 до 2e-2) или cosine

    Returns:
        NoiseSchedule с alpha_bar[0] = 1

    Raises:
        ScheduleError: T < 1 или неизвестный тип
    """
    if int(T) < 1:
        raise ScheduleError(f"T должно быть >= 1, получено {T}", details={"T": T})
    try:
        kind = ScheduleKind(kind)
    except ValueError as exc:
        raise ScheduleError(f"Неизвестный тип расписания: {kind}") from exc

    betas = _linear_betas(T) if kind is ScheduleKind.linear_beta else _cosine_betas(T)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    logger.debug("Расписание %s: T=%d, alpha_bar[T]=%.3e", kind.value, T, alpha_bar[-1])
    return NoiseSchedule(T=int(T), alpha_bar=alpha_bar, kind=kind)


def _broadcast(values: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    if values.dim() == 0:
        return values
    return values.reshape(-1, *([1] * (like.dim() - 1)))


def forward_diffuse(
    z0: torch.Tensor,
    t: torch.Tensor | int,
    eps: torch.Tensor,
    schedule: NoiseSchedule,
) -> torch.Tensor:
    """
    z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.

    t может быть скаляром или тензором (B,) с шагом на каждый элемент батча.

    Raises:
        ShapeMismatchError: Формы z0 и eps различаются
        ScheduleError: t вне [0, T]
    """
    if z0.shape != eps.shape:
        raise ShapeMismatchError(
            "Формы z0 и eps различаются",
            details={"z0": list(z0.shape), "eps": list(eps.shape)},
        )
    t_tensor = torch.as_tensor(t)
    if t_tensor.numel() and (int(t_tensor.min()) < 0 or int(t_tensor.max()) > schedule.T):
        raise ScheduleError(f"Шаг t вне [0, {schedule.T}]")

    alpha_bar = _broadcast(schedule.at(t_tensor, like=z0), z0)
    return alpha_bar.sqrt() * z0 + (1.0 - alpha_bar).sqrt() * eps
