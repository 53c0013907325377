"""Доменные сущности карт границ."""

from dataclasses import dataclass

import numpy as np

from .value_objects import EdgeSource


@dataclass
class EdgeMap:
    """Бинарная карта границ того же размера, что и срез."""

    edges: np.ndarray
    source: EdgeSource = EdgeSource.native

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self.edges.shape)

    def flipped(self) -> np.ndarray:
        """Отражение слева направо относительно вертикальной середины."""
        return self.edges[:, ::-1].copy()

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.edges))
