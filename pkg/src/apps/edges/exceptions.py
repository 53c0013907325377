"""Исключения для построения карт границ."""


class EdgesBaseException(Exception):
    """Базовое исключение для приложения edges."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class KernelSizeError(EdgesBaseException):
    """Размер ядра сглаживания чётный или неположительный."""


class EdgeThresholdError(EdgesBaseException):
    """Нижний порог Canny не меньше верхнего."""


class EdgeDimensionError(EdgesBaseException):
    """Размеры карты границ и маски не совпадают."""
