"""Исключения обучения."""


class TrainingBaseException(Exception):
    """Базовое исключение для приложения training."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class TrainConfigError(TrainingBaseException):
    """Некорректные параметры обучения."""


class EmptyTrainingSplitError(TrainingBaseException):
    """В обучающей выборке нет срезов."""


class ResolutionMismatchError(TrainingBaseException):
    """Разрешение срезов кэша не совпадает с конфигурацией."""


class MissingEdgeCacheError(TrainingBaseException):
    """Для стадии 2 не найдены карты границ."""


class NonFiniteLossError(TrainingBaseException):
    """Значение функции потерь не является конечным числом."""
