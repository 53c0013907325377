"""Доменные сущности реконструкции."""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ...dataset.domain.entities import SliceRecord
from ...dataset.domain.value_objects import SliceClass
from ..exceptions import InvalidRequestError
from .value_objects import DEFAULT_STEPS, EdgeMode, MaskSource


@dataclass
class ReconstructionRequest:
    """Запрос на псевдоздоровую реконструкцию одного среза."""

    slice: SliceRecord
    checkpoint: Path
    steps: int = DEFAULT_STEPS
    seed: int = 0
    mask_override: Optional[np.ndarray] = None
    edge_mode: EdgeMode = EdgeMode.mirrored

    def validate(self) -> None:
        """
        Проверить инварианты запроса.

        Raises:
            InvalidRequestError: Срез не опухолевый и маска не задана, или steps < 1
        """
        if self.steps < 1:
            raise InvalidRequestError(f"steps должен быть >= 1, получено {self.steps}")
        if self.slice.slice_class is not SliceClass.tumorous and self.mask_override is None:
            raise InvalidRequestError(
                "Для неопухолевого среза нужна явная маска",
                details={"record_id": self.slice.record_id},
            )
        if self.mask_override is not None and self.mask_override.shape != self.slice.image.shape:
            raise InvalidRequestError(
                "Размер маски не совпадает со срезом",
                details={
                    "mask": list(self.mask_override.shape),
                    "slice": list(self.slice.image.shape),
                },
            )


@dataclass
class Provenance:
    """Всё, что нужно для побитового воспроизведения результата."""

    record_id: str
    prompt: str
    template_index: int
    seed: int
    steps: int
    checkpoint_hash: str
    checkpoint_stage: str
    mask_source: MaskSource
    edge_mode: EdgeMode
    mask_pixels: int

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mask_source"] = self.mask_source.value
        data["edge_mode"] = self.edge_mode.value
        return data


@dataclass
class ReconstructionResult:
    image: np.ndarray
    mask: np.ndarray
    provenance: Provenance
    edge_map: Optional[np.ndarray] = None
