"""Композит отражённых контралатеральных границ."""

import logging

import numpy as np

from ..domain.entities import EdgeMap
from ..domain.value_objects import EdgeSource
from ..exceptions import EdgeDimensionError

logger = logging.getLogger(__name__)


def mirror_composite(edge_map: EdgeMap, inpaint_mask: np.ndarray) -> EdgeMap:
    """
    Подставить отражённые границы внутри маски, снаружи оставить исходные.

    Args:
        edge_map: Исходная карта границ
        inpaint_mask: Бинарная маска реконструкции

    Returns:
        Карта границ с source = mirrored_composite

    Raises:
        EdgeDimensionError: Размеры не совпадают
    """
    mask = np.asarray(inpaint_mask).astype(bool)
    if mask.shape != edge_map.shape:
        raise EdgeDimensionError(
            "Размеры карты границ и маски не совпадают",
            details={"edges": list(edge_map.shape), "mask": list(mask.shape)},
        )
    flipped = edge_map.flipped()
    composite = np.where(mask, flipped, edge_map.edges).astype(np.uint8)
    return EdgeMap(edges=composite, source=EdgeSource.mirrored_composite)
