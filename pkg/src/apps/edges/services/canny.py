"""Детектор границ Canny: сглаживание, Собель, подавление немаксимумов, гистерезис."""

import logging

import numpy as np
from scipy import ndimage

from ..domain.entities import EdgeMap
from ..domain.value_objects import CannyParams, EdgeSource
from ..exceptions import EdgeThresholdError, KernelSizeError

logger = logging.getLogger(__name__)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# Смещения (строка, столбец) вдоль направления градиента для каждого сектора
_SECTOR_OFFSETS = {
    0: (0, 1),
    45: (1, 1),
    90: (1, 0),
    135: (1, -1),
}


def gaussian_kernel(kernel: int = 5, sigma: float = 1.0) -> np.ndarray:
    """
    Нормированное двумерное ядро Гаусса.

    Raises:
        KernelSizeError: Чётный или неположительный размер, sigma <= 0
    """
    if kernel < 1 or kernel % 2 == 0:
        raise KernelSizeError(
            f"Размер ядра должен быть нечётным положительным, получено {kernel}",
            details={"kernel": kernel},
        )
    if sigma <= 0:
        raise KernelSizeError(f"sigma должна быть положительной, получено {sigma}")
    radius = kernel // 2
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    k2 = np.outer(g, g)
    return k2 / k2.sum()


def gaussian_smooth(image: np.ndarray, kernel: int = 5, sigma: float = 1.0) -> np.ndarray:
    """Свёртка с нормированным ядром Гаусса, границы отражаются."""
    weights = gaussian_kernel(kernel, sigma)
    return ndimage.convolve(np.asarray(image, dtype=np.float64), weights, mode="reflect")


def rescale_to_255(image: np.ndarray) -> np.ndarray:
    """Линейно растянуть срез на [0, 255]; постоянный срез даёт нули."""
    data = np.asarray(image, dtype=np.float64)
    lo, hi = float(data.min()), float(data.max())
    if hi - lo <= 0:
        return np.zeros_like(data)
    return (data - lo) * (255.0 / (hi - lo))


def _shift(values: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Значение соседа (i + dr, j + dc), вне кадра нули."""
    out = np.zeros_like(values)
    h, w = values.shape
    src_r = slice(max(dr, 0), h + min(dr, 0))
    dst_r = slice(max(-dr, 0), h + min(-dr, 0))
    src_c = slice(max(dc, 0), w + min(dc, 0))
    dst_c = slice(max(-dc, 0), w + min(-dc, 0))
    out[dst_r, dst_c] = values[src_r, src_c]
    return out


def non_maximum_suppression(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """
    Оставить локальные максимумы модуля градиента вдоль его направления.

    Сравнение несимметрично (>= вперёд, > назад): на плато из двух
    равных пикселей остаётся ровно один.
    """
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    sector = np.select(
        [
            (angle < 22.5) | (angle >= 157.5),
            angle < 67.5,
            angle < 112.5,
        ],
        [0, 45, 90],
        default=135,
    )
    keep = np.zeros(magnitude.shape, dtype=bool)
    for key, (dr, dc) in _SECTOR_OFFSETS.items():
        forward = _shift(magnitude, dr, dc)
        backward = _shift(magnitude, -dr, -dc)
        in_sector = sector == key
        keep |= in_sector & (magnitude >= forward) & (magnitude > backward)
    return np.where(keep & (magnitude > 0), magnitude, 0.0)


def hysteresis(suppressed: np.ndarray, low: float, high: float) -> np.ndarray:
    """Оставить слабые границы, 8-связно соединённые с сильными."""
    weak = suppressed >= low
    strong = suppressed >= high
    labels, count = ndimage.label(weak, structure=_EIGHT_CONNECTED)
    if count == 0:
        return np.zeros(suppressed.shape, dtype=np.uint8)
    keep_labels = np.unique(labels[strong])
    keep_labels = keep_labels[keep_labels > 0]
    return np.isin(labels, keep_labels).astype(np.uint8)


def canny_edges(
    image: np.ndarray,
    low: float = 30.0,
    high: float = 80.0,
    kernel: int = 5,
    sigma: float = 1.0,
) -> EdgeMap:
    """
    Карта границ Canny.

    Args:
        image: Двумерный срез (любой линейной шкалы)
        low: Нижний порог в шкале [0, 255]
        high: Верхний порог в шкале [0, 255]
        kernel: Размер ядра Гаусса
        sigma: СКО ядра Гаусса

    Returns:
        Бинарная карта границ

    Raises:
        EdgeThresholdError: low >= high
    """
    if low >= high:
        raise EdgeThresholdError(
            f"Нижний порог {low} должен быть меньше верхнего {high}",
            details={"low": low, "high": high},
        )
    scaled = rescale_to_255(image)
    smoothed = gaussian_smooth(scaled, kernel, sigma)
    gx = ndimage.sobel(smoothed, axis=1)
    gy = ndimage.sobel(smoothed, axis=0)
    magnitude = np.hypot(gx, gy)
    suppressed = non_maximum_suppression(magnitude, gx, gy)
    edges = hysteresis(suppressed, low, high)
    return EdgeMap(edges=edges, source=EdgeSource.native)


def canny_from_params(image: np.ndarray, params: CannyParams) -> EdgeMap:
    return canny_edges(image, params.low, params.high, params.kernel, params.sigma)
