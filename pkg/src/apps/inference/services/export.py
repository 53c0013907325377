"""Экспорт результатов реконструкции: PNG 16 бит, float32, маска, провенанс, карта разности."""

import io
import logging
from pathlib import Path

import numpy as np
from PIL import Image

from src.core.files import atomic_write_bytes, atomic_write_json

from ..domain.entities import ReconstructionResult
from ..exceptions import MaskFileError

logger = logging.getLogger(__name__)

UINT16_MAX = 65535


def to_uint16(image: np.ndarray, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Линейно отобразить [lo, hi] в [0, 65535]."""
    scaled = (np.clip(image, lo, hi) - lo) / (hi - lo)
    return np.round(scaled * UINT16_MAX).astype(np.uint16)


def png_bytes(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(array).save(buffer, format="PNG")
    return buffer.getvalue()


def difference_map(input_image: np.ndarray, output: np.ndarray) -> np.ndarray:
    """|input - output|, значения в [0, 2]."""
    return np.abs(input_image.astype(np.float64) - output.astype(np.float64)).astype(np.float32)


def export_result(
    result: ReconstructionResult,
    input_image: np.ndarray,
    out_dir: Path,
    with_difference: bool = True,
) -> dict[str, Path]:
    """
    Записать результат реконструкции в каталог.

    Returns:
        Словарь вид артефакта -> путь
    """
    out_dir = Path(out_dir)
    stem = result.provenance.record_id
    paths = {
        "png": out_dir / f"{stem}_pseudohealthy.png",
        "raw": out_dir / f"{stem}_pseudohealthy.f32",
        "mask": out_dir / f"{stem}_mask.png",
        "provenance": out_dir / f"{stem}_provenance.json",
    }
    atomic_write_bytes(paths["png"], png_bytes(to_uint16(result.image)))
    atomic_write_bytes(paths["raw"], np.ascontiguousarray(result.image, dtype="<f4").tobytes())
    atomic_write_bytes(paths["mask"], png_bytes((result.mask > 0).astype(np.uint8) * 255))
    if with_difference:
        paths["difference"] = out_dir / f"{stem}_difference.png"
        diff = difference_map(input_image, result.image)
        atomic_write_bytes(paths["difference"], png_bytes(to_uint16(diff, 0.0, 2.0)))

    atomic_write_json(
        paths["provenance"],
        {
            **result.provenance.to_dict(),
            "shape": list(result.image.shape),
            "raw_dtype": "<f4",
            "files": {kind: path.name for kind, path in paths.items()},
        },
    )
    logger.debug("Результат %s экспортирован в %s", stem, out_dir)
    return paths


def read_raw(path: Path, shape: tuple[int, int]) -> np.ndarray:
    return np.frombuffer(Path(path).read_bytes(), dtype="<f4").reshape(shape).copy()


def read_mask(path: Path) -> np.ndarray:
    """
    Прочитать маску реконструкции из .npy или изображения (ненулевые пиксели = 1).

    Raises:
        MaskFileError: Файл не читается или маска не двумерная
    """
    path = Path(path)
    try:
        if path.suffix == ".npy":
            array = np.load(path, allow_pickle=False)
        else:
            with Image.open(path) as image:
                array = np.asarray(image.convert("L"))
    except (OSError, ValueError) as exc:
        raise MaskFileError(f"Не удалось прочитать маску {path}", details={"path": str(path)}) from exc
    if array.ndim != 2:
        raise MaskFileError(
            f"Маска должна быть двумерной, получено {array.shape}",
            details={"path": str(path), "shape": list(array.shape)},
        )
    return (array > 0).astype(np.uint8)
