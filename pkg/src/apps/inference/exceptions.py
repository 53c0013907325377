"""Исключения реконструкции."""


class InferenceBaseException(Exception):
    """Базовое исключение для приложения inference."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class EmptyMaskError(InferenceBaseException):
    """Маска реконструкции пуста."""


class InvalidRequestError(InferenceBaseException):
    """Запрос на реконструкцию некорректен."""


class ControlBranchRequiredError(InferenceBaseException):
    """Для управления границами нужен чекпойнт стадии 2."""


class CompositeShapeError(InferenceBaseException):
    """Формы сгенерированного изображения, входа и маски различаются."""


class MaskFileError(InferenceBaseException):
    """Файл маски не удалось прочитать."""
