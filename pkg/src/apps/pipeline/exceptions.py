"""Исключения оркестрации пайплайна."""


class PipelineBaseException(Exception):
    """Базовое исключение для приложения pipeline."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ConfigValidationError(PipelineBaseException):
    """Файл конфигурации не прошёл проверку схемы."""

    def __init__(self, message: str, errors: list[str] | None = None) -> None:
        self.errors = list(errors or [])
        super().__init__(message, details={"errors": self.errors})


class MissingArtifactError(PipelineBaseException):
    """Не найден артефакт предыдущего шага пайплайна."""


class UnknownCommandError(PipelineBaseException):
    """Неизвестная команда пайплайна."""
