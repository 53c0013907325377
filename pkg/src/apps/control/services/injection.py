"""Аддитивное внедрение признаков ветви управления в входы декодера."""

from typing import Sequence

import torch

from ..exceptions import InjectionSiteMismatchError


def inject(
    decoder_inputs: Sequence[torch.Tensor],
    features: Sequence[torch.Tensor],
) -> list[torch.Tensor]:
    """
    Поэлементно сложить признаки с входами декодера.

    Args:
        decoder_inputs: Skip-входы декодера и выход среднего блока
        features: По одному признаку на точку внедрения

    Returns:
        Новый список входов; исходные тензоры не изменяются

    Raises:
        InjectionSiteMismatchError: Число или формы признаков не совпадают
    """
    if len(decoder_inputs) != len(features):
        raise InjectionSiteMismatchError(
            f"Точек внедрения {len(decoder_inputs)}, признаков {len(features)}",
            details={"sites": len(decoder_inputs), "features": len(features)},
        )
    injected = []
    for index, (site, feature) in enumerate(zip(decoder_inputs, features)):
        if site.shape != feature.shape:
            raise InjectionSiteMismatchError(
                f"Форма признака не совпадает с точкой внедрения {index}",
                details={"site": list(site.shape), "feature": list(feature.shape)},
            )
        injected.append(site + feature)
    return injected
