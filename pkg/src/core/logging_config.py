import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from .config import settings

_RESERVED_ATTRS = frozenset(
    logging.LogRecord("", 0, "", 0, "", (), None).__dict__.keys()
) | {"message", "asctime"}


class JsonLinesFormatter(logging.Formatter):
    """Форматтер: одна JSON-запись на строку."""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS and not key.startswith("_"):
                payload[key] = value
        if record.exc_info:
            payload["exc"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False, default=str)


def setup_logging() -> None:
    """Настройка логирования для всего приложения"""

    log_level = getattr(logging, settings.log_level.upper(), logging.INFO)

    formatter: logging.Formatter
    if settings.log_json:
        formatter = JsonLinesFormatter()
    else:
        formatter = logging.Formatter(settings.log_format)

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]

    if settings.log_to_file:
        log_dir = Path(settings.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(
            logging.FileHandler(log_dir / "pipeline.log", encoding="utf-8")
        )

    for handler in handlers:
        handler.setFormatter(formatter)

    logging.basicConfig(level=log_level, handlers=handlers, force=True)

    # Отключаем избыточное логирование библиотек
    logging.getLogger("PIL").setLevel(logging.WARNING)
    logging.getLogger("nibabel").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
