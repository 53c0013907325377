"""Экстракторы признаков изображений для FID."""

from typing import Protocol, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from ..domain.value_objects import HISTOGRAM_BINS, POOL_SIZE
from ..exceptions import UnconfiguredExtractorError


class FeatureExtractor(Protocol):
    name: str
    dim: int

    def __call__(self, image: np.ndarray) -> np.ndarray: ...


class HistogramPoolExtractor:
    """
    Детерминированный безвесовый экстрактор: 64-корзинная гистограмма
    интенсивностей на [-1, 1] (доли пикселей) и среднее по сетке 8x8.
    """

    name = "histogram"

    def __init__(self, bins: int = HISTOGRAM_BINS, pool: int = POOL_SIZE) -> None:
        self.bins = bins
        self.pool = pool
        self.dim = bins + pool * pool

    def __call__(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image, dtype=np.float64)
        counts, _ = np.histogram(np.clip(image, -1.0, 1.0), bins=self.bins, range=(-1.0, 1.0))
        histogram = counts / image.size
        pooled = F.adaptive_avg_pool2d(
            torch.from_numpy(image)[None, None], (self.pool, self.pool)
        )[0, 0].numpy()
        return np.concatenate([histogram, pooled.ravel()])


EXTRACTORS = {"histogram": HistogramPoolExtractor}


def build_extractor(name: str) -> FeatureExtractor:
    """
    Raises:
        UnconfiguredExtractorError: Экстрактор не зарегистрирован
    """
    if name not in EXTRACTORS:
        raise UnconfiguredExtractorError(
            f"Экстрактор признаков '{name}' не настроен",
            details={"available": sorted(EXTRACTORS)},
        )
    return EXTRACTORS[name]()


def feature_extract(images: Sequence[np.ndarray], extractor: FeatureExtractor | str = "histogram") -> list[np.ndarray]:
    """Вектор признаков фиксированной длины для каждого изображения, в том же порядке."""
    if isinstance(extractor, str):
        extractor = build_extractor(extractor)
    return [extractor(image) for image in images]
