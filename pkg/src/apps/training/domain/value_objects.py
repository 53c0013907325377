"""Value Objects обучения."""

from dataclasses import asdict, dataclass, field
from typing import Optional

from ...diffusion.domain.value_objects import Stage
from ..exceptions import TrainConfigError


@dataclass(frozen=True)
class TrainConfig:
    """Гиперпараметры одной стадии обучения (Value Object)."""

    stage: Stage = Stage.stage1
    batch_size: int = 8
    grad_accum: int = 4
    epochs: int = 30
    lr: float = 5e-5
    betas: tuple[float, float] = field(default=(0.9, 0.999))
    weight_decay: float = 0.01
    warmup_steps: int = 0
    grad_clip: float = 1.0
    seed: int = 0
    max_steps: Optional[int] = None
    num_workers: int = 0

    def __post_init__(self) -> None:
        positive = {
            "batch_size": self.batch_size,
            "grad_accum": self.grad_accum,
            "epochs": self.epochs,
            "lr": self.lr,
            "grad_clip": self.grad_clip,
        }
        for name, value in positive.items():
            if value <= 0:
                raise TrainConfigError(
                    f"{name} должен быть положительным, получено {value}",
                    details={name: value},
                )
        if self.warmup_steps < 0 or self.weight_decay < 0 or self.num_workers < 0:
            raise TrainConfigError("warmup_steps, weight_decay и num_workers не могут быть отрицательными")
        if self.max_steps is not None and self.max_steps <= 0:
            raise TrainConfigError(f"max_steps должен быть положительным, получено {self.max_steps}")
        if not all(0 <= b < 1 for b in self.betas):
            raise TrainConfigError(f"betas вне [0, 1): {self.betas}")
        object.__setattr__(self, "stage", Stage(self.stage))
        object.__setattr__(self, "betas", tuple(self.betas))

    @property
    def effective_batch(self) -> int:
        return self.batch_size * self.grad_accum

    def to_dict(self) -> dict:
        data = asdict(self)
        data["stage"] = self.stage.value
        data["betas"] = list(self.betas)
        return data

    @classmethod
    def stage1(cls, **overrides) -> "TrainConfig":
        return cls(**{"stage": Stage.stage1, "epochs": 30, "lr": 5e-5, "warmup_steps": 0, **overrides})

    @classmethod
    def stage2(cls, **overrides) -> "TrainConfig":
        return cls(**{"stage": Stage.stage2, "epochs": 20, "lr": 5e-4, "warmup_steps": 500, **overrides})
