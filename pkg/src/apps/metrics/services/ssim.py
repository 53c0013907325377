"""SSIM с равномерным окном и контралатеральная оценка."""

import logging

import numpy as np
from scipy import ndimage

from ..domain.value_objects import DATA_RANGE, SSIM_WINDOW, ssim_constants
from ..exceptions import ContralateralRegionError, EmptyMaskError, ImageShapeError

logger = logging.getLogger(__name__)


def ssim_map(
    x: np.ndarray,
    y: np.ndarray,
    window: int = SSIM_WINDOW,
    data_range: float = DATA_RANGE,
) -> np.ndarray:
    """
    Карта локального SSIM по окнам, целиком лежащим внутри изображения.

    Raises:
        ImageShapeError: Формы различаются или окно больше изображения
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise ImageShapeError(
            "Изображения должны быть двумерными и одной формы",
            details={"x": list(x.shape), "y": list(y.shape)},
        )
    if window > min(x.shape):
        raise ImageShapeError(
            f"Окно {window} больше изображения {x.shape}",
            details={"window": window, "shape": list(x.shape)},
        )
    c1, c2 = ssim_constants(data_range)

    def local_mean(image: np.ndarray) -> np.ndarray:
        return ndimage.uniform_filter(image, size=window, mode="reflect")

    half = window // 2
    crop = (slice(half, x.shape[0] - (window - 1 - half)), slice(half, x.shape[1] - (window - 1 - half)))
    mu_x = local_mean(x)[crop]
    mu_y = local_mean(y)[crop]
    var_x = local_mean(x * x)[crop] - mu_x**2
    var_y = local_mean(y * y)[crop] - mu_y**2
    cov_xy = local_mean(x * y)[crop] - mu_x * mu_y

    numerator = (2 * mu_x * mu_y + c1) * (2 * cov_xy + c2)
    denominator = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return numerator / denominator


def ssim(
    x: np.ndarray,
    y: np.ndarray,
    window: int = SSIM_WINDOW,
    data_range: float = DATA_RANGE,
) -> float:
    """Среднее локального SSIM."""
    return float(ssim_map(x, y, window, data_range).mean())


def mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    """(r0, r1, c0, c1) включительно."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def _expand(lo: int, hi: int, size: int, extent: int) -> tuple[int, int]:
    length = hi - lo + 1
    if length >= size:
        return lo, hi
    grow = size - length
    lo = max(0, lo - grow // 2)
    lo = min(lo, max(0, extent - size))
    return lo, lo + size - 1


def contralateral_ssim(
    image: np.ndarray,
    mask: np.ndarray,
    window: int = SSIM_WINDOW,
    data_range: float = DATA_RANGE,
) -> float:
    """
    SSIM между областью маски и её отражением относительно вертикальной середины.

    Ограничивающий прямоугольник маски расширяется до размера окна,
    отражается по столбцам, отражённый фрагмент зеркалится слева направо.

    Raises:
        EmptyMaskError: Маска пуста
        ContralateralRegionError: Отражённый прямоугольник вне среза
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask).astype(bool)
    if mask.shape != image.shape:
        raise ImageShapeError("Размеры маски и среза различаются")
    if not mask.any():
        raise EmptyMaskError("Пустая маска для контралатеральной оценки")

    height, width = image.shape
    r0, r1, c0, c1 = mask_bbox(mask)
    if c0 <= (width - 1) / 2.0 <= c1:
        logger.warning(
            "Маска пересекает среднюю линию (столбцы %d..%d из %d), оценка выполняется",
            c0,
            c1,
            width,
        )
    r0, r1 = _expand(r0, r1, window, height)
    c0, c1 = _expand(c0, c1, window, width)

    m0, m1 = width - 1 - c1, width - 1 - c0
    if r1 >= height or c1 >= width or m0 < 0 or m1 >= width:
        raise ContralateralRegionError(
            "Отражённая область выходит за границы среза",
            details={"bbox": [r0, r1, c0, c1], "shape": [height, width]},
        )
    region = image[r0 : r1 + 1, c0 : c1 + 1]
    mirrored = image[r0 : r1 + 1, m0 : m1 + 1][:, ::-1]
    return ssim(region, mirrored, window, data_range)
