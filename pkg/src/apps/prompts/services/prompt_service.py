"""Отрисовка подсказок из фиксированных шаблонов."""

import logging
from typing import Optional

import numpy as np

from ..domain.entities import PromptSpec
from ..domain.value_objects import (
    MODALITY_TEXT,
    SIZE_BINS,
    SIZE_RANGE,
    TEMPLATES,
    UNKNOWN_AGE,
    CaseKind,
    SizeDesc,
)
from ..exceptions import PromptRenderError, TumorSizeRangeError

logger = logging.getLogger(__name__)


def size_category(tumor_pixel_count: int) -> SizeDesc:
    """
    Категория размера опухоли по площади.

    Raises:
        TumorSizeRangeError: Площадь вне [1000, 3000]
    """
    lo, hi = SIZE_RANGE
    if not lo <= tumor_pixel_count <= hi:
        raise TumorSizeRangeError(
            f"Площадь опухоли {tumor_pixel_count} вне диапазона [{lo}, {hi}]",
            details={"tumor_pixel_count": tumor_pixel_count},
        )
    for upper, desc in SIZE_BINS:
        if tumor_pixel_count <= upper:
            return desc
    return SIZE_BINS[-1][1]


def age_description(age: Optional[float]) -> str:
    """'70-year-old' или 'unknown age'."""
    if age is None:
        return UNKNOWN_AGE
    value = float(age)
    number = str(int(value)) if value.is_integer() else f"{value:g}"
    return f"{number}-year-old"


def size_text(size_desc: SizeDesc) -> str:
    return f"{size_desc.value}-sized"


def render_prompt(
    case_kind: CaseKind,
    rng: np.random.Generator,
    age: Optional[float] = None,
    size_desc: Optional[SizeDesc] = None,
    template_index: Optional[int] = None,
    modality: str = MODALITY_TEXT,
) -> PromptSpec:
    """
    Отрисовать подсказку по случайно выбранному шаблону.

    Args:
        case_kind: Тип случая
        rng: Генератор для выбора шаблона
        age: Возраст субъекта (None -> 'unknown age')
        size_desc: Категория размера (только для опухолевых)
        template_index: Номер шаблона 1..3 (по умолчанию выбирается rng)
        modality: Текст модальности

    Returns:
        Спецификация подсказки

    Raises:
        PromptRenderError: Категория размера противоречит типу случая
    """
    if case_kind is CaseKind.tumorous and size_desc is None:
        raise PromptRenderError("Для опухолевого случая нужна категория размера")
    if case_kind is CaseKind.non_tumorous and size_desc is not None:
        raise PromptRenderError("У здорового случая не может быть категории размера")

    templates = TEMPLATES[case_kind]
    if template_index is None:
        template_index = int(rng.integers(1, len(templates) + 1))
    if not 1 <= template_index <= len(templates):
        raise PromptRenderError(
            f"Номер шаблона {template_index} вне 1..{len(templates)}",
            details={"template_index": template_index},
        )

    age_desc = age_description(age)
    fields = {"modality": modality, "age_desc": age_desc}
    if size_desc is not None:
        fields["size_desc"] = size_text(size_desc)
    text = templates[template_index - 1].format(**fields)

    return PromptSpec(
        case_kind=case_kind,
        modality=modality,
        age_desc=age_desc,
        size_desc=size_desc,
        template_index=template_index,
        text=text,
    )
