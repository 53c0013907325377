"""Коды завершения процесса для семейств исключений."""

import logging

from ..dataset.exceptions import DatasetBaseException, SliceCacheError, VolumeNotFoundError
from ..diffusion.exceptions import DiffusionBaseException, StageMismatchError
from ..inference.exceptions import InferenceBaseException, MaskFileError
from ..metrics.exceptions import MetricsBaseException, UnconfiguredExtractorError
from ..training.exceptions import NonFiniteLossError, TrainConfigError, TrainingBaseException
from .exceptions import (
    ConfigValidationError,
    MissingArtifactError,
    PipelineBaseException,
    UnknownCommandError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_RUNTIME = 4
EXIT_STAGE_MISMATCH = 5

# Поиск идёт по MRO исключения: первым совпадает самый специфичный класс
EXIT_CODES: dict[type[BaseException], int] = {
    ConfigValidationError: EXIT_CONFIG,
    UnknownCommandError: EXIT_CONFIG,
    TrainConfigError: EXIT_CONFIG,
    UnconfiguredExtractorError: EXIT_CONFIG,
    MaskFileError: EXIT_CONFIG,
    MissingArtifactError: EXIT_MISSING_ARTIFACT,
    SliceCacheError: EXIT_MISSING_ARTIFACT,
    VolumeNotFoundError: EXIT_MISSING_ARTIFACT,
    StageMismatchError: EXIT_STAGE_MISMATCH,
    NonFiniteLossError: EXIT_RUNTIME,
    PipelineBaseException: EXIT_RUNTIME,
    DatasetBaseException: EXIT_RUNTIME,
    DiffusionBaseException: EXIT_RUNTIME,
    TrainingBaseException: EXIT_RUNTIME,
    InferenceBaseException: EXIT_RUNTIME,
    MetricsBaseException: EXIT_RUNTIME,
}


def exit_code_for(exc: BaseException) -> int:
    """Код завершения для исключения; неизвестные ошибки считаются сбоем выполнения."""
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return EXIT_RUNTIME


def report_failure(exc: BaseException) -> int:
    """Записать ошибку в лог и вернуть код завершения."""
    code = exit_code_for(exc)
    message = getattr(exc, "message", str(exc))
    details = getattr(exc, "details", {})
    if code == EXIT_RUNTIME and not hasattr(exc, "message"):
        logger.exception("Непредвиденная ошибка: %s", exc)
    else:
        logger.error(
            "%s: %s",
            type(exc).__name__,
            message,
            extra={"error_type": type(exc).__name__, "details": details, "exit_code": code},
        )
    return code
