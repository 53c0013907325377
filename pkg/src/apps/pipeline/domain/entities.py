"""Доменные сущности оркестрации."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .value_objects import Command


@dataclass
class RunOutcome:
    """Итог выполнения команды."""

    command: Command
    artifact_dir: Path
    skipped: bool = False
    outputs: dict[str, str] = field(default_factory=dict)
    run_record: Optional[Path] = None
    summary: dict = field(default_factory=dict)
