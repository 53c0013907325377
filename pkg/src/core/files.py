"""Атомарная запись файлов и контентные хэши."""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

logger = logging.getLogger(__name__)


@retry(
    retry=retry_if_exception_type(OSError),
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.1, min=0.1, max=2),
    reraise=True,
)
def atomic_write_bytes(path: Path, data: bytes) -> None:
    """
    Записать байты атомарно: временный файл рядом + os.replace.

    Args:
        path: Целевой путь
        data: Содержимое
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def canonical_json(payload: Any) -> str:
    """Каноническая JSON-строка (сортированные ключи, без пробелов)."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def atomic_write_json(path: Path, payload: Any) -> None:
    """Записать JSON-документ атомарно."""
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)
    atomic_write_bytes(path, (text + "\n").encode("utf-8"))


def read_json(path: Path) -> Any:
    """Прочитать JSON-документ."""
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    """SHA-256 содержимого файла."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_tree(root: Path, pattern: str = "*") -> dict[str, str]:
    """
    Хэши всех файлов каталога (рекурсивно).

    Args:
        root: Каталог
        pattern: Маска файлов

    Returns:
        Словарь относительный путь -> SHA-256
    """
    root = Path(root)
    if root.is_file():
        return {root.name: sha256_file(root)}
    hashes: dict[str, str] = {}
    for path in sorted(root.rglob(pattern)):
        if path.is_file() and not path.name.startswith("."):
            hashes[path.relative_to(root).as_posix()] = sha256_file(path)
    return hashes
