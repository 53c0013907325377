"""Доменные сущности подсказок."""

from dataclasses import dataclass
from typing import Optional

from .value_objects import MAX_TOKENS, CaseKind, SizeDesc


@dataclass(frozen=True)
class PromptSpec:
    """Отрисованная подсказка и параметры шаблона."""

    case_kind: CaseKind
    modality: str
    age_desc: str
    size_desc: Optional[SizeDesc]
    template_index: int
    text: str

    def to_dict(self) -> dict:
        return {
            "case_kind": self.case_kind.value,
            "modality": self.modality,
            "age_desc": self.age_desc,
            "size_desc": self.size_desc.value if self.size_desc else None,
            "template_index": self.template_index,
            "text": self.text,
        }


@dataclass(frozen=True)
class TokenSequence:
    """Последовательность идентификаторов фиксированной длины."""

    ids: tuple[int, ...]
    pad_id: int

    def __post_init__(self) -> None:
        if len(self.ids) != MAX_TOKENS:
            raise ValueError(f"Длина последовательности {len(self.ids)} != {MAX_TOKENS}")

    def __len__(self) -> int:
        return len(self.ids)
