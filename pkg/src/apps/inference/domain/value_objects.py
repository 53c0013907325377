"""Value Objects реконструкции."""

from enum import Enum

DEFAULT_STEPS = 50


class EdgeMode(str, Enum):
    mirrored = "mirrored"  # Зеркальная композиция (по умолчанию)
    native = "native"      # Собственные границы среза
    none = "none"          # Без управления границами (базовая модель стадии 1)


class MaskSource(str, Enum):
    dilated_tumor = "dilated_tumor"
    override = "override"


# Значение --mask, выбирающее расширенную маску опухоли из среза
AUTO_MASK = "auto"
