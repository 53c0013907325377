"""Исключения ветви управления."""


class ControlBaseException(Exception):
    """Базовое исключение для приложения control."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class InjectionSiteMismatchError(ControlBaseException):
    """Число признаков не совпадает с числом точек внедрения."""


class ArchitectureMismatchError(ControlBaseException):
    """Копия энкодера не совпадает с энкодером базовой модели."""


class EdgeDimensionMismatchError(ControlBaseException):
    """Карта границ несовместима с латентным разрешением."""
