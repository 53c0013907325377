import json
import logging
import os
from pathlib import Path

import pytest

from src.core.files import atomic_write_json, canonical_json, hash_tree, read_json, sha256_bytes
from src.core.logging_config import JsonLinesFormatter


def test_atomic_write_json_is_sorted_and_leaves_no_temp(tmp_path: Path) -> None:
    target = tmp_path / "nested" / "doc.json"
    atomic_write_json(target, {"b": 1, "a": [1, 2]})
    assert read_json(target) == {"a": [1, 2], "b": 1}
    assert target.read_text(encoding="utf-8").index('"a"') < target.read_text(encoding="utf-8").index('"b"')
    assert [p.name for p in target.parent.iterdir()] == ["doc.json"]


def test_atomic_write_retries_transient_errors(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    real_replace = os.replace
    calls = {"n": 0}

    def flaky(src: str, dst: str) -> None:
        calls["n"] += 1
        if calls["n"] == 1:
            raise OSError("busy")
        real_replace(src, dst)

    monkeypatch.setattr(os, "replace", flaky)
    atomic_write_json(tmp_path / "doc.json", {"x": 1})
    assert calls["n"] == 2
    assert read_json(tmp_path / "doc.json") == {"x": 1}
    assert len(list(tmp_path.iterdir())) == 1


def test_canonical_json_ignores_key_order() -> None:
    assert canonical_json({"b": 1, "a": 2}) == canonical_json({"a": 2, "b": 1}) == '{"a":2,"b":1}'


def test_hash_tree_skips_hidden_files(tmp_path: Path) -> None:
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "x.bin").write_bytes(b"abc")
    (tmp_path / ".hidden").write_bytes(b"zzz")
    assert hash_tree(tmp_path) == {"sub/x.bin": sha256_bytes(b"abc")}
    assert hash_tree(tmp_path / "sub" / "x.bin") == {"x.bin": sha256_bytes(b"abc")}


def test_json_lines_formatter_carries_extra_fields() -> None:
    record = logging.LogRecord("src.test", logging.WARNING, __file__, 1, "шаг %d", (3,), None)
    record.exit_code = 4
    payload = json.loads(JsonLinesFormatter().format(record))
    assert payload["msg"] == "шаг 3"
    assert payload["level"] == "WARNING"
    assert payload["logger"] == "src.test"
    assert payload["exit_code"] == 4
    assert "args" not in payload
