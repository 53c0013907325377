"""Шаблоны подсказок и категории размера опухоли."""

from enum import Enum


class CaseKind(str, Enum):
    non_tumorous = "non_tumorous"  # Здоровый срез
    tumorous = "tumorous"          # Срез с опухолью


class SizeDesc(str, Enum):
    small = "small"
    mild = "mild"
    medium = "medium"
    moderate = "moderate"
    large = "large"


MODALITY_TEXT = "T1CE MRI"
UNKNOWN_AGE = "unknown age"
MAX_TOKENS = 77

NON_TUMOROUS_TEMPLATES: tuple[str, ...] = (
    "{modality} of a {age_desc} healthy individual.",
    "A {age_desc} healthy person undergoing {modality}.",
    "{modality} image of a healthy brain (age: {age_desc}).",
)

TUMOROUS_TEMPLATES: tuple[str, ...] = (
    "{modality} of a {age_desc} patient with a {size_desc} tumor.",
    "A {age_desc} patient's {modality} scan showing a {size_desc} tumor.",
    "{modality} image showing a {size_desc} brain tumor in a {age_desc} patient.",
)

TEMPLATES: dict[CaseKind, tuple[str, ...]] = {
    CaseKind.non_tumorous: NON_TUMOROUS_TEMPLATES,
    CaseKind.tumorous: TUMOROUS_TEMPLATES,
}

# Верхние границы (включительно) категорий: середины между опорными значениями
# 1400 / ~1700 / ~2000 / ~2300 / ~3000
SIZE_BINS: tuple[tuple[int, SizeDesc], ...] = (
    (1400, SizeDesc.small),
    (1850, SizeDesc.mild),
    (2150, SizeDesc.medium),
    (2650, SizeDesc.moderate),
    (3000, SizeDesc.large),
)

SIZE_RANGE = (1000, 3000)
