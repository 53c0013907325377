"""Загрузка объёмов BraTS из NIfTI."""

import json
import logging
from pathlib import Path
from typing import Optional

import nibabel as nib
import numpy as np

from ..domain.entities import Volume
from ..domain.value_objects import MODALITY_FILE_SUFFIX, SEGMENTATION_FILE_SUFFIX, Modality
from ..exceptions import (
    SegmentationLabelError,
    VolumeDimensionMismatchError,
    VolumeNotFoundError,
)

logger = logging.getLogger(__name__)

_NIFTI_SUFFIXES = (".nii.gz", ".nii")


def _split_nifti_name(path: Path) -> tuple[str, str]:
    name = path.name
    for suffix in _NIFTI_SUFFIXES:
        if name.endswith(suffix):
            return name[: -len(suffix)], suffix
    raise VolumeNotFoundError(
        f"Файл {path} не является NIfTI", details={"path": str(path)}
    )


def segmentation_path_for(path: Path, modality: Modality = Modality.t1ce) -> Path:
    """
    Построить путь к сегментации по соглашению BraTS.

    Args:
        path: Путь к файлу модальности (``<id>_t1ce.nii.gz``)
        modality: Модальность

    Returns:
        Путь ``<id>_seg.nii.gz``
    """
    stem, suffix = _split_nifti_name(Path(path))
    modality_suffix = MODALITY_FILE_SUFFIX[modality]
    if not stem.endswith(modality_suffix):
        raise VolumeNotFoundError(
            f"Имя файла {path.name} не соответствует соглашению BraTS",
            details={"expected_suffix": modality_suffix},
        )
    subject_stem = stem[: -len(modality_suffix)]
    return Path(path).with_name(f"{subject_stem}{SEGMENTATION_FILE_SUFFIX}{suffix}")


def subject_id_for(path: Path, modality: Modality = Modality.t1ce) -> str:
    stem, _ = _split_nifti_name(Path(path))
    return stem[: -len(MODALITY_FILE_SUFFIX[modality])]


def _read_age(path: Path, subject_id: str) -> Optional[float]:
    sidecar = Path(path).with_name(f"{subject_id}.json")
    if not sidecar.exists():
        return None
    with open(sidecar, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    age = meta.get("age")
    return float(age) if age is not None else None


def discover_subjects(data_root: Path, modality: Modality = Modality.t1ce) -> list[Path]:
    """
    Найти все файлы модальности в каталоге данных.

    Args:
        data_root: Корень набора данных
        modality: Модальность

    Returns:
        Отсортированный список путей
    """
    suffix = MODALITY_FILE_SUFFIX[modality]
    paths = [
        p
        for ext in _NIFTI_SUFFIXES
        for p in Path(data_root).rglob(f"*{suffix}{ext}")
    ]
    paths = sorted(set(paths))
    logger.info("Найдено объёмов %s: %d", modality.value, len(paths))
    return paths


def load_volume(path: Path, modality: Modality = Modality.t1ce) -> Volume:
    """
    Загрузить объём и его сегментацию.

    Args:
        path: Путь к файлу модальности
        modality: Модальность

    Returns:
        Объём с проверенными размерами

    Raises:
        VolumeNotFoundError: Нет файла изображения или сегментации
        VolumeDimensionMismatchError: Размеры не совпадают
        SegmentationLabelError: Метки не целые или отрицательные
    """
    path = Path(path)
    seg_path = segmentation_path_for(path, modality)
    for candidate in (path, seg_path):
        if not candidate.exists():
            raise VolumeNotFoundError(
                f"Файл {candidate} не найден", details={"path": str(candidate)}
            )

    voxels = np.asarray(nib.load(str(path)).get_fdata(dtype=np.float32))
    seg_raw = np.asarray(nib.load(str(seg_path)).get_fdata(dtype=np.float64))

    if voxels.ndim != 3:
        raise VolumeDimensionMismatchError(
            f"Ожидался трёхмерный объём, получено измерений: {voxels.ndim}",
            details={"shape": list(voxels.shape)},
        )
    if voxels.shape != seg_raw.shape:
        raise VolumeDimensionMismatchError(
            "Размеры объёма и сегментации не совпадают",
            details={"voxels": list(voxels.shape), "seg": list(seg_raw.shape)},
        )
    if np.any(seg_raw < 0) or not np.array_equal(seg_raw, np.round(seg_raw)):
        raise SegmentationLabelError(
            "Сегментация содержит отрицательные или дробные метки",
            details={"path": str(seg_path)},
        )

    subject_id = subject_id_for(path, modality)
    volume = Volume(
        voxels=voxels,
        seg=seg_raw.astype(np.int16),
        subject_id=subject_id,
        modality=modality,
        age=_read_age(path, subject_id),
    )
    logger.debug("Загружен объём %s: %s", subject_id, volume.shape)
    return volume
