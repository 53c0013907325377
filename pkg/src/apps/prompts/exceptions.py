"""Исключения для генерации текстовых подсказок."""


class PromptsBaseException(Exception):
    """Базовое исключение для приложения prompts."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class TumorSizeRangeError(PromptsBaseException):
    """Площадь опухоли вне диапазона категорий размера."""


class PromptRenderError(PromptsBaseException):
    """Входные данные подсказки противоречат типу случая."""


class TokenizationError(PromptsBaseException):
    """Ошибка токенизации (пустой текст, недоступный токенизатор)."""
