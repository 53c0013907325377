"""Исключения для подготовки срезов МРТ."""


class DatasetBaseException(Exception):
    """Базовое исключение для приложения dataset."""

    def __init__(self, message: str, details: dict | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class VolumeNotFoundError(DatasetBaseException):
    """Файл объёма или сегментации не найден."""


class VolumeDimensionMismatchError(DatasetBaseException):
    """Размеры объёма и сегментации не совпадают."""


class SegmentationLabelError(DatasetBaseException):
    """Метки сегментации не являются неотрицательными целыми."""


class SliceRangeError(DatasetBaseException):
    """Диапазон срезов выходит за пределы объёма."""


class SliceGeometryError(DatasetBaseException):
    """Срез не помещается в целевой размер."""


class EmptyTumorPoolError(DatasetBaseException):
    """Нет опухолевых срезов, из которых можно заимствовать маску."""


class SplitError(DatasetBaseException):
    """Невозможно выполнить разбиение по субъектам."""


class SliceCacheError(DatasetBaseException):
    """Кэш срезов повреждён или отсутствует."""
