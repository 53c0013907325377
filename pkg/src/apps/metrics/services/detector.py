"""Детекторы опухоли для доли ложноположительных реконструкций."""

import logging
from typing import Protocol, Sequence

import numpy as np
from scipy import ndimage

from ..domain.value_objects import DetectorParams
from ..exceptions import EmptySetError, UnconfiguredExtractorError

logger = logging.getLogger(__name__)


class TumorDetector(Protocol):
    name: str

    def __call__(self, image: np.ndarray) -> bool: ...


class ThresholdDetector:
    """
    Отмечает срез, если среднее какого-либо окна patch x patch
    превышает заданный перцентиль среза больше чем на margin.
    """

    name = "threshold"

    def __init__(self, params: DetectorParams = DetectorParams()) -> None:
        self.params = params

    def max_patch_mean(self, image: np.ndarray) -> float:
        image = np.asarray(image, dtype=np.float64)
        patch = min(self.params.patch, *image.shape)
        means = ndimage.uniform_filter(image, size=patch, mode="reflect")
        half = patch // 2
        tail = patch - 1 - half
        valid = means[half : image.shape[0] - tail, half : image.shape[1] - tail]
        return float(valid.max())

    def threshold(self, image: np.ndarray) -> float:
        return float(np.percentile(image, self.params.percentile)) + self.params.margin

    def __call__(self, image: np.ndarray) -> bool:
        return self.max_patch_mean(image) > self.threshold(image)


DETECTORS = {"threshold": ThresholdDetector}


def build_detector(name: str, params: DetectorParams = DetectorParams()) -> TumorDetector:
    """
    Raises:
        UnconfiguredExtractorError: Детектор не зарегистрирован
    """
    if name not in DETECTORS:
        raise UnconfiguredExtractorError(
            f"Детектор '{name}' не настроен",
            details={"available": sorted(DETECTORS)},
        )
    return DETECTORS[name](params)


def fp_rate(slices: Sequence[np.ndarray], detector: TumorDetector) -> tuple[float, list[bool]]:
    """
    Доля срезов, отмеченных детектором.

    Returns:
        (доля, вердикты по срезам)

    Raises:
        EmptySetError: Пустой набор
    """
    if len(slices) == 0:
        raise EmptySetError("Пустой набор срезов для оценки FP")
    verdicts = [bool(detector(s)) for s in slices]
    return sum(verdicts) / len(verdicts), verdicts
