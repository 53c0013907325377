"""Синтетические фантомы мозга для настольного пресета и тестов."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import nibabel as nib
import numpy as np

from src.core.files import atomic_write_bytes

logger = logging.getLogger(__name__)

# Интенсивности в условных единицах сканера
BRAIN_LEVEL = 450.0
RIM_LEVEL = 800.0
VENTRICLE_LEVEL = 150.0
ENHANCING_LEVEL = 1000.0
CORE_LEVEL = 900.0
EDEMA_LEVEL = 700.0


@dataclass(frozen=True)
class PhantomAnatomy:
    """Параметры симметричной анатомии одного субъекта."""

    half_width: float
    half_height: float
    ventricle_offset: float
    ventricle_rx: float
    ventricle_ry: float
    texture_period: float


@dataclass(frozen=True)
class PhantomTumor:
    """Параметры шаровидной опухоли в одном полушарии."""

    row: float
    col: float
    center_slice: int
    radius: float
    half_depth: float


def random_anatomy(width: int, height: int, rng: np.random.Generator) -> PhantomAnatomy:
    jitter = rng.uniform(0.92, 1.08, size=5)
    return PhantomAnatomy(
        half_width=0.38 * width * float(jitter[0]),
        half_height=0.44 * height * float(jitter[1]),
        ventricle_offset=0.12 * width * float(jitter[2]),
        ventricle_rx=0.05 * width * float(jitter[3]),
        ventricle_ry=0.12 * height * float(jitter[4]),
        texture_period=float(rng.uniform(5.0, 9.0)),
    )


def anatomy_slice(
    height: int,
    width: int,
    anatomy: PhantomAnatomy,
    scale: float = 1.0,
) -> np.ndarray:
    """
    Симметричный относительно вертикальной середины срез «мозга».

    Args:
        height: Число строк
        width: Число столбцов
        anatomy: Параметры анатомии
        scale: Масштаб сечения (меньше у краёв объёма)

    Returns:
        Срез в условных единицах, фон 0
    """
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)
    dx = np.abs(cols - (width - 1) / 2.0)
    dy = rows - (height - 1) / 2.0

    a = anatomy.half_width * scale
    b = anatomy.half_height * scale
    radial = (dx / a) ** 2 + (dy / b) ** 2
    brain = radial <= 1.0

    image = np.zeros((height, width), dtype=np.float64)
    texture = 1.0 + 0.08 * np.cos(2.0 * np.pi * dx / anatomy.texture_period)
    image[brain] = (BRAIN_LEVEL * texture)[brain]

    rim = brain & (radial >= (1.0 - 4.0 / max(a, b)))
    image[rim] = RIM_LEVEL

    ventricles = (
        ((dx - anatomy.ventricle_offset * scale) / (anatomy.ventricle_rx * scale)) ** 2
        + ((dy + 0.05 * height) / (anatomy.ventricle_ry * scale)) ** 2
    ) <= 1.0
    image[ventricles & brain] = VENTRICLE_LEVEL
    return image


def tumor_labels(
    height: int,
    width: int,
    tumor: PhantomTumor,
    slice_index: int,
) -> np.ndarray:
    """Метки опухоли BraTS-стиля {1, 2, 4} в срезе (0 вне опухоли)."""
    depth = (slice_index - tumor.center_slice) / tumor.half_depth
    labels = np.zeros((height, width), dtype=np.int16)
    if abs(depth) >= 1.0:
        return labels
    radius = tumor.radius * float(np.sqrt(1.0 - depth**2))
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)
    dist = np.hypot(rows - tumor.row, cols - tumor.col)
    labels[dist < radius] = 2
    labels[dist < 0.75 * radius] = 4
    labels[dist < 0.3 * radius] = 1
    return labels


def _tumor_intensity(labels: np.ndarray) -> np.ndarray:
    lut = np.zeros(5, dtype=np.float64)
    lut[1], lut[2], lut[4] = CORE_LEVEL, EDEMA_LEVEL, ENHANCING_LEVEL
    return lut[labels]


def make_phantom_volume(
    shape: tuple[int, int, int] = (64, 64, 16),
    rng: Optional[np.random.Generator] = None,
    with_tumor: bool = True,
    tumor_radius: tuple[float, float] = (5.5, 6.5),
) -> tuple[np.ndarray, np.ndarray]:
    """
    Построить фантомный объём в раскладке BraTS (x, y, z).

    Args:
        shape: Размер (x, y, z)
        rng: Генератор случайных чисел
        with_tumor: Добавить опухоль в одно полушарие
        tumor_radius: Диапазон радиуса опухоли в пикселях

    Returns:
        (voxels, seg)
    """
    rng = rng or np.random.default_rng(0)
    nx, ny, nz = shape
    height, width = ny, nx
    anatomy = random_anatomy(width, height, rng)

    tumor: Optional[PhantomTumor] = None
    if with_tumor:
        side = 1.0 if rng.random() < 0.5 else -1.0
        tumor = PhantomTumor(
            row=float((height - 1) / 2.0 + rng.uniform(-0.12, 0.12) * height),
            col=float((width - 1) / 2.0 + side * rng.uniform(0.16, 0.22) * width),
            center_slice=int(rng.integers(nz // 3, 2 * nz // 3 + 1)),
            radius=float(rng.uniform(*tumor_radius)),
            half_depth=float(max(3.0, nz / 4.0)),
        )

    voxels = np.zeros(shape, dtype=np.float32)
    seg = np.zeros(shape, dtype=np.int16)
    for k in range(nz):
        scale = 0.75 + 0.25 * float(np.cos(np.pi * (k - (nz - 1) / 2.0) / nz))
        image = anatomy_slice(height, width, anatomy, scale)
        labels = np.zeros((height, width), dtype=np.int16)
        if tumor is not None:
            labels = tumor_labels(height, width, tumor, k)
            inside = labels > 0
            image[inside] = _tumor_intensity(labels)[inside]
        voxels[:, :, k] = image.T.astype(np.float32)
        seg[:, :, k] = labels.T
    return voxels, seg


def write_phantom_subject(
    root: Path,
    subject_id: str,
    voxels: np.ndarray,
    seg: np.ndarray,
    age: Optional[float] = None,
) -> Path:
    """
    Записать субъекта в раскладке BraTS: ``<id>/<id>_t1ce.nii.gz`` и ``<id>_seg.nii.gz``.

    Returns:
        Путь к файлу модальности
    """
    subject_dir = Path(root) / subject_id
    subject_dir.mkdir(parents=True, exist_ok=True)
    affine = np.eye(4)
    image_path = subject_dir / f"{subject_id}_t1ce.nii.gz"
    nib.save(nib.Nifti1Image(voxels.astype(np.float32), affine), str(image_path))
    nib.save(
        nib.Nifti1Image(seg.astype(np.int16), affine),
        str(subject_dir / f"{subject_id}_seg.nii.gz"),
    )
    sidecar = {"age": age}
    atomic_write_bytes(
        subject_dir / f"{subject_id}.json",
        json.dumps(sidecar, sort_keys=True).encode("utf-8"),
    )
    return image_path


def make_phantom_corpus(
    root: Path,
    subjects: int = 12,
    shape: tuple[int, int, int] = (64, 64, 16),
    seed: int = 0,
    tumor_share: float = 0.75,
) -> list[Path]:
    """
    Сгенерировать набор фантомных субъектов.

    Args:
        root: Каталог данных
        subjects: Число субъектов
        shape: Размер объёма
        seed: Seed генерации
        tumor_share: Доля субъектов с опухолью

    Returns:
        Пути к файлам модальности
    """
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(subjects):
        subject_id = f"Phantom_{i + 1:03d}"
        with_tumor = bool(rng.random() < tumor_share)
        voxels, seg = make_phantom_volume(shape, rng, with_tumor=with_tumor)
        age = None if rng.random() < 0.2 else float(rng.integers(30, 81))
        paths.append(write_phantom_subject(root, subject_id, voxels, seg, age))
    logger.info("Сгенерировано фантомов: %d в %s", subjects, root)
    return paths


def symmetric_phantom_slice(
    size: int = 64,
    rng: Optional[np.random.Generator] = None,
    blob_radius: float = 6.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Двумерный фантом: симметричная анатомия плюс яркое пятно в одном полушарии.

    Returns:
        (изображение с пятном в [-1, 1], то же без пятна в [-1, 1], маска пятна)
    """
    rng = rng or np.random.default_rng(0)
    anatomy = random_anatomy(size, size, rng)
    healthy = anatomy_slice(size, size, anatomy)
    side = 1.0 if rng.random() < 0.5 else -1.0
    tumor = PhantomTumor(
        row=float((size - 1) / 2.0 + rng.uniform(-0.1, 0.1) * size),
        col=float((size - 1) / 2.0 + side * 0.2 * size),
        center_slice=0,
        radius=blob_radius,
        half_depth=1.0,
    )
    labels = tumor_labels(size, size, tumor, 0)
    sick = healthy.copy()
    sick[labels > 0] = _tumor_intensity(labels)[labels > 0]
    return _to_unit_range(sick), _to_unit_range(healthy), (labels > 0).astype(np.uint8)


def _to_unit_range(image: np.ndarray) -> np.ndarray:
    return (2.0 * np.clip(image / ENHANCING_LEVEL, 0.0, 1.0) - 1.0).astype(np.float32)
