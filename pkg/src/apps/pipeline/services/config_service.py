"""Загрузка и проверка конфигурации запуска."""

import copy
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from src.core.config import settings

from ..exceptions import ConfigValidationError
from ..presets import PRESETS
from ..schemas import PathsSection, Preset, RunConfig

logger = logging.getLogger(__name__)


def deep_merge(base: dict, override: dict) -> dict:
    """Рекурсивно наложить override на копию base."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config_file(path: Path) -> dict:
    """
    Прочитать TOML-файл конфигурации.

    Raises:
        ConfigValidationError: Файл не найден или не разбирается
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigValidationError(
            f"Файл конфигурации не найден: {path}", errors=[f"config: файл {path} не найден"]
        ) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigValidationError(
            f"Файл конфигурации не разбирается: {path}", errors=[f"config: {exc}"]
        ) from exc


def _format_error(error: dict) -> str:
    location = ".".join(str(part) for part in error["loc"]) or "config"
    return f"{location}: {error['msg']}"


def _resolve_preset(raw: dict, preset: Optional[str]) -> Preset:
    name = preset or raw.get("preset") or settings.default_preset
    try:
        return Preset(name)
    except ValueError as exc:
        raise ConfigValidationError(
            f"Неизвестный пресет: {name}",
            errors=[f"preset: ожидается одно из {[p.value for p in Preset]}, получено '{name}'"],
        ) from exc


def _path_errors(config: RunConfig) -> list[str]:
    """Пути должны существовать как каталоги или быть создаваемыми."""
    errors = []
    for name in PathsSection.model_fields:
        path = Path(getattr(config.paths, name))
        if path.exists():
            if not path.is_dir():
                errors.append(f"paths.{name}: {path} существует и не является каталогом")
            continue
        ancestor = path.absolute().parent
        while not ancestor.exists():
            ancestor = ancestor.parent
        if not ancestor.is_dir() or not os.access(ancestor, os.W_OK):
            errors.append(f"paths.{name}: {path} нельзя создать (ближайший предок {ancestor})")
    return errors


def build_config(
    raw: dict,
    preset: Optional[str] = None,
    seed: Optional[int] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """
    Собрать RunConfig: пресет, затем ключи файла, затем переопределения CLI.

    Args:
        raw: Содержимое файла конфигурации
        preset: Пресет из командной строки (приоритетнее файла)
        seed: Seed из командной строки
        overrides: Вложенный словарь переопределений

    Raises:
        ConfigValidationError: Ошибки схемы, по одной на ключ
    """
    chosen = _resolve_preset(raw, preset)
    merged = deep_merge(PRESETS[chosen], raw)
    merged["preset"] = chosen.value
    if seed is not None:
        merged["seed"] = seed
    if overrides:
        merged = deep_merge(merged, overrides)

    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as exc:
        errors = [_format_error(error) for error in exc.errors()]
        raise ConfigValidationError(
            f"Конфигурация не прошла проверку: {len(errors)} ошибок", errors=errors
        ) from exc

    errors = _path_errors(config)
    if errors:
        raise ConfigValidationError("Недопустимые пути в конфигурации", errors=errors)
    logger.debug("Конфигурация %s (пресет %s) собрана", config.config_hash[:12], chosen.value)
    return config


def validate_config(
    path: Optional[Path] = None,
    preset: Optional[str] = None,
    seed: Optional[int] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """
    Проверить файл конфигурации и заполнить значения по умолчанию из пресета.

    Без файла используется только пресет.

    Raises:
        ConfigValidationError: Файл не разбирается или ключи не проходят проверку
    """
    raw = load_config_file(path) if path is not None else {}
    return build_config(raw, preset=preset, seed=seed, overrides=overrides)
