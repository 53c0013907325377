"""Операции над срезами: извлечение, нормализация, геометрия, маски."""

import logging

import numpy as np
from scipy import ndimage

from ..domain.entities import RawSlice, Volume
from ..domain.value_objects import SliceClass
from ..exceptions import SliceGeometryError, SliceRangeError

logger = logging.getLogger(__name__)

# 3x3 крест: одна итерация расширяет маску на 1 в метрике городских кварталов
_CROSS = ndimage.generate_binary_structure(2, 1)


def merge_tumor_labels(seg_slice: np.ndarray) -> np.ndarray:
    """Объединить все подобласти опухоли в одну бинарную метку."""
    return (np.asarray(seg_slice) > 0).astype(np.uint8)


def extract_slices(volume: Volume, lo: int = 80, hi: int = 130) -> list[RawSlice]:
    """
    Извлечь аксиальные срезы с индексами lo..hi включительно.

    Срез берётся как ``voxels[:, :, k].T``: столбцы изображения идут
    слева направо, вертикальная середина кадра совпадает со средней линией.

    Верхняя граница включается в диапазон, поэтому допустимо hi <= глубина - 1:
    hi, равный глубине объёма, указывал бы на несуществующий срез.

    Args:
        volume: Объём
        lo: Первый индекс
        hi: Последний индекс (включительно)

    Returns:
        Список из hi - lo + 1 пар изображение/сегментация

    Raises:
        SliceRangeError: Диапазон пуст или выходит за пределы объёма
    """
    extent = volume.axial_extent
    if not (0 <= lo < hi) or hi > extent - 1:
        raise SliceRangeError(
            f"Диапазон срезов [{lo}, {hi}] недопустим для объёма глубиной {extent}",
            details={"lo": lo, "hi": hi, "extent": extent},
        )
    return [
        RawSlice(
            image=np.ascontiguousarray(volume.voxels[:, :, k].T),
            seg=np.ascontiguousarray(volume.seg[:, :, k].T),
            slice_index=k,
        )
        for k in range(lo, hi + 1)
    ]


def clip_and_normalize(image: np.ndarray, pct: float = 99.5) -> np.ndarray:
    """
    Обрезать интенсивности по перцентилю ненулевых вокселей и привести к [-1, 1].

    Args:
        image: Срез в единицах сканера
        pct: Перцентиль обрезки

    Returns:
        Срез в диапазоне [-1, 1]; пустой срез целиком отображается в -1
    """
    data = np.asarray(image, dtype=np.float64)
    nonzero = data[data != 0]
    if nonzero.size == 0:
        return np.full(data.shape, -1.0, dtype=np.float32)

    threshold = float(np.percentile(nonzero, pct))
    if threshold <= 0:
        return np.full(data.shape, -1.0, dtype=np.float32)

    clipped = np.clip(data, 0.0, threshold)
    unit = clipped / threshold
    return (2.0 * unit - 1.0).astype(np.float32)


def pad_and_resize(
    image: np.ndarray,
    pad_to: int = 256,
    out: int = 512,
    fill: float = 0.0,
) -> np.ndarray:
    """
    Дополнить срез до pad_to x pad_to по центру и увеличить до out x out
    методом ближайшего соседа.

    Args:
        image: Двумерный срез
        pad_to: Размер после дополнения
        out: Итоговый размер
        fill: Значение дополнения

    Returns:
        Срез размера out x out

    Raises:
        SliceGeometryError: Срез больше pad_to
    """
    h, w = image.shape
    if h > pad_to or w > pad_to:
        raise SliceGeometryError(
            f"Срез {h}x{w} больше целевого размера {pad_to}",
            details={"shape": [h, w], "pad_to": pad_to},
        )
    top = (pad_to - h) // 2
    left = (pad_to - w) // 2
    padded = np.full((pad_to, pad_to), fill, dtype=image.dtype)
    padded[top : top + h, left : left + w] = image

    if out == pad_to:
        return padded
    src = (np.arange(out) * pad_to) // out
    return padded[np.ix_(src, src)]


def categorize_slice(
    tumor_pixel_count: int,
    tumor_min: int = 1000,
    tumor_max: int = 3000,
) -> SliceClass:
    """
    Отнести срез к классу по площади опухоли.

    0 -> non_tumorous; [tumor_min, tumor_max] -> tumorous; иначе excluded.
    """
    if tumor_pixel_count < 0:
        raise ValueError("Площадь опухоли не может быть отрицательной")
    if tumor_pixel_count == 0:
        return SliceClass.non_tumorous
    if tumor_min <= tumor_pixel_count <= tumor_max:
        return SliceClass.tumorous
    return SliceClass.excluded


def scaled_tumor_area(mask: np.ndarray, area_scale: float = 1.0) -> int:
    """Площадь опухоли в пикселях эталонного разрешения."""
    return int(round(int(np.count_nonzero(mask)) * area_scale))


def dilate_mask(mask: np.ndarray, radius: int = 5) -> np.ndarray:
    """
    Морфологическое расширение маски крестом 3x3, radius итераций.

    Результат совпадает с шаром радиуса radius в метрике L1.
    """
    binary = np.asarray(mask).astype(bool)
    if radius <= 0 or not binary.any():
        return binary.astype(np.uint8)
    return ndimage.binary_dilation(binary, structure=_CROSS, iterations=radius).astype(np.uint8)
