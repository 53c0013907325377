"""Доменные сущности подготовки срезов."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .value_objects import Modality, SliceClass


@dataclass
class Volume:
    """Трёхмерный объём МРТ с сегментацией опухоли."""

    voxels: np.ndarray
    seg: np.ndarray
    subject_id: str
    modality: Modality = Modality.t1ce
    age: Optional[float] = None

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.voxels.shape)

    @property
    def axial_extent(self) -> int:
        return int(self.voxels.shape[2])


@dataclass
class RawSlice:
    """Сырой аксиальный срез: изображение и метки с индексом."""

    image: np.ndarray
    seg: np.ndarray
    slice_index: int


@dataclass
class SliceRecord:
    """Нормализованный двумерный срез с масками и метаданными."""

    image: np.ndarray
    tumor_mask: np.ndarray
    inpaint_mask: np.ndarray
    subject_id: str
    slice_index: int
    slice_class: SliceClass
    tumor_pixel_count: int
    age: Optional[float] = None

    @property
    def record_id(self) -> str:
        return f"{self.subject_id}_{self.slice_index:03d}"

    def is_tumorous(self) -> bool:
        """Проверить, относится ли срез к опухолевым."""
        return self.slice_class is SliceClass.tumorous


@dataclass
class SplitManifest:
    """Разбиение субъектов на обучающую и тестовую выборки."""

    train_subjects: set[str]
    test_subjects: set[str]
    seed: int
    counts: dict[str, dict[str, int]] = field(default_factory=dict)

    def split_of(self, subject_id: str) -> str:
        """
        Определить выборку субъекта.

        Returns:
            "train" или "test"

        Raises:
            KeyError: Если субъект не входит в разбиение
        """
        if subject_id in self.train_subjects:
            return "train"
        if subject_id in self.test_subjects:
            return "test"
        raise KeyError(subject_id)

    def to_dict(self) -> dict:
        return {
            "train_subjects": sorted(self.train_subjects),
            "test_subjects": sorted(self.test_subjects),
            "seed": self.seed,
            "counts": self.counts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SplitManifest":
        return cls(
            train_subjects=set(data["train_subjects"]),
            test_subjects=set(data["test_subjects"]),
            seed=int(data["seed"]),
            counts=data.get("counts", {}),
        )
