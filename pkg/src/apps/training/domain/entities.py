"""Доменные сущности обучения."""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import torch


@dataclass
class TrainingBatch:
    """Микро-батч: изображения, маски, токены подсказок и (для стадии 2) границы."""

    images: torch.Tensor
    masks: torch.Tensor
    tokens: torch.Tensor
    indices: list[int]
    record_ids: list[str]
    prompts: list[str] = field(default_factory=list)
    edges: Optional[torch.Tensor] = None

    def __len__(self) -> int:
        return int(self.images.shape[0])


@dataclass
class StepLog:
    """Строка журнала обучения."""

    step: int
    epoch: int
    lr: float
    loss: float
    grad_norm: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingResult:
    """Итог стадии обучения."""

    checkpoint_path: Path
    content_hash: str
    steps: int
    final_loss: float
    log_path: Path
    history: list[StepLog] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "checkpoint": self.checkpoint_path.name,
            "content_hash": self.content_hash,
            "steps": self.steps,
            "final_loss": self.final_loss,
        }
