"""Value Objects для подготовки срезов."""

from dataclasses import dataclass
from enum import Enum


class Modality(str, Enum):
    t1ce = "T1CE"  # T1 с контрастным усилением


class SliceClass(str, Enum):
    tumorous = "tumorous"          # Опухолевый срез
    non_tumorous = "non_tumorous"  # Срез без опухоли
    excluded = "excluded"          # Исключён из обоих классов


MODALITY_FILE_SUFFIX = {
    Modality.t1ce: "_t1ce",
}

SEGMENTATION_FILE_SUFFIX = "_seg"


@dataclass(frozen=True)
class PreprocessParams:
    """Параметры предобработки срезов (Value Object)."""

    slice_lo: int = 80
    slice_hi: int = 130
    clip_percentile: float = 99.5
    pad_to: int = 256
    out_size: int = 512
    tumor_min: int = 1000
    tumor_max: int = 3000
    dilation_radius: int = 5
    area_scale: float = 1.0
    split_ratio: float = 0.9
    split_tolerance: float = 0.02
