"""Value Objects для карт границ."""

from dataclasses import dataclass
from enum import Enum


class EdgeSource(str, Enum):
    native = "native"                          # Границы самого среза
    mirrored_composite = "mirrored_composite"  # Отражённые границы внутри маски


@dataclass(frozen=True)
class CannyParams:
    """Параметры детектора Canny (Value Object)."""

    kernel: int = 5
    sigma: float = 1.0
    low: float = 30.0
    high: float = 80.0
