"""Детерминированный DDIM-сэмплер (eta = 0)."""

import logging
from typing import Optional

import numpy as np
import torch

from ..domain.entities import ConditioningPack, DenoiserBundle, NoiseSchedule
from ..exceptions import SamplerError
from .denoising import predict_noise

logger = logging.getLogger(__name__)


def ddim_timesteps(T: int, steps: int) -> list[tuple[int, int]]:
    """
    Лестница шагов от T вниз с равным шагом.

    Returns:
        Пары (t, t_prev); последний t_prev = 0

    Raises:
        SamplerError: steps вне [1, T]
    """
    if not 1 <= steps <= T:
        raise SamplerError(
            f"Число шагов {steps} вне [1, {T}]",
            details={"steps": steps, "T": T},
        )
    ladder = np.linspace(T, 0, steps + 1).round().astype(int).tolist()
    return list(zip(ladder[:-1], ladder[1:]))


@torch.no_grad()
def sample(
    bundle: DenoiserBundle,
    schedule: NoiseSchedule,
    shape: tuple[int, ...],
    pack: ConditioningPack,
    steps: int,
    generator: Optional[torch.Generator] = None,
    z_T: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Сэмплировать чистый латент из нормального шума.

    Args:
        bundle: Набор моделей
        schedule: Расписание шума
        shape: Форма латента (B, C, h, w)
        pack: Условия (шаг в пакете переписывается на каждом шаге лестницы)
        steps: Число шагов сэмплера
        generator: Генератор начального шума
        z_T: Готовый начальный шум (вместо генератора)

    Returns:
        Оценка z0
    """
    ladder = ddim_timesteps(schedule.T, steps)
    dtype = next(bundle.denoiser.parameters()).dtype
    if z_T is None:
        z = torch.randn(shape, generator=generator, dtype=dtype)
    else:
        z = z_T.to(dtype)

    for t, t_prev in ladder:
        eps_hat = predict_noise(bundle, z, pack.at_timestep(t))
        alpha = schedule.at(t, like=z)
        alpha_prev = schedule.at(t_prev, like=z)
        x0 = (z - (1.0 - alpha).sqrt() * eps_hat) / alpha.sqrt()
        z = alpha_prev.sqrt() * x0 + (1.0 - alpha_prev).sqrt() * eps_hat

    logger.debug("DDIM: %d шагов, T=%d", steps, schedule.T)
    return z
