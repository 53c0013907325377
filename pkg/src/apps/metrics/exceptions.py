"""Исключения метрик."""


class MetricsBaseException(Exception):
    """Базовое исключение для приложения metrics."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class InsufficientSamplesError(MetricsBaseException):
    """Для оценки гауссианы нужно не менее двух векторов."""


class FeatureDimensionError(MetricsBaseException):
    """Размерности признаков не совпадают."""


class NonPSDCovarianceError(MetricsBaseException):
    """Матрица не положительно полуопределена в пределах допуска."""


class UnconfiguredExtractorError(MetricsBaseException):
    """Экстрактор признаков не настроен."""


class ImageShapeError(MetricsBaseException):
    """Формы изображений не совпадают или окно больше изображения."""


class EmptyMaskError(MetricsBaseException):
    """Маска для контралатеральной оценки пуста."""


class ContralateralRegionError(MetricsBaseException):
    """Отражённая область выходит за границы среза."""


class EmptySetError(MetricsBaseException):
    """Пустой набор срезов."""
