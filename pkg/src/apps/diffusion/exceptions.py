"""Исключения диффузионного ядра."""


class DiffusionBaseException(Exception):
    """Базовое исключение для приложения diffusion."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ScheduleError(DiffusionBaseException):
    """Некорректные параметры расписания шума."""


class ShapeMismatchError(DiffusionBaseException):
    """Формы тензоров не совпадают."""


class MaskGeometryError(DiffusionBaseException):
    """Размеры маски не делятся на коэффициент латентного пространства."""


class ControlBranchMissingError(DiffusionBaseException):
    """Передана карта границ, но ветвь управления не подключена."""


class SamplerError(DiffusionBaseException):
    """Некорректные параметры сэмплера."""


class CheckpointError(DiffusionBaseException):
    """Чекпойнт повреждён или несовместим."""


class StageMismatchError(CheckpointError):
    """Стадия чекпойнта не совпадает с ожидаемой."""
