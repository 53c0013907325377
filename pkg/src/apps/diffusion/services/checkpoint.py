"""Контейнер чекпойнта: веса компонентов, флаги заморозки, расписание, хэши."""

import hashlib
import io
import logging
from pathlib import Path
from typing import Optional

import torch

from src.core.files import atomic_write_bytes, canonical_json

from ...control.services.control_branch import attach, init_from_backbone
from ..domain.entities import DenoiserBundle, LoadedCheckpoint, NoiseSchedule
from ..domain.value_objects import ModelSpec, ScheduleKind, Stage
from ..exceptions import CheckpointError, StageMismatchError
from .denoising import build_bundle
from .schedule import make_schedule

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "pseudohealthy-checkpoint"
CHECKPOINT_VERSION = 1
COMPONENTS = ("denoiser", "text_encoder", "autoencoder")


def _state(module: torch.nn.Module) -> dict[str, torch.Tensor]:
    return {k: v.detach().cpu().clone() for k, v in module.state_dict().items()}


def content_hash(payload: dict) -> str:
    """
    SHA-256 содержимого чекпойнта: метаданные в каноническом JSON
    и байты тензоров в порядке отсортированных ключей.
    """
    digest = hashlib.sha256()
    meta = {k: v for k, v in payload.items() if k not in ("components", "control")}
    digest.update(canonical_json(meta).encode("utf-8"))
    sections = dict(payload["components"])
    if payload.get("control") is not None:
        sections["control"] = payload["control"]
    for section in sorted(sections):
        for key in sorted(sections[section]):
            tensor = sections[section][key].contiguous()
            digest.update(f"{section}/{key}:{tensor.dtype}:{list(tensor.shape)}".encode())
            digest.update(tensor.numpy().tobytes())
    return digest.hexdigest()


def save_checkpoint(
    path: Path,
    bundle: DenoiserBundle,
    schedule: NoiseSchedule,
    stage: Stage,
    config_hash: str,
    parent_hash: Optional[str] = None,
) -> str:
    """
    Атомарно записать чекпойнт.

    Returns:
        Контентный хэш чекпойнта
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "stage": Stage(stage).value,
        "model_spec": bundle.spec.to_dict(),
        "schedule": schedule.to_dict(),
        "freeze_flags": dict(bundle.freeze_flags),
        "components": {name: _state(getattr(bundle, name)) for name in COMPONENTS},
        "control": _state(bundle.control) if bundle.control is not None else None,
        "config_hash": config_hash,
        "parent_hash": parent_hash,
    }
    digest = content_hash(payload)
    buffer = io.BytesIO()
    torch.save(payload, buffer)
    atomic_write_bytes(Path(path), buffer.getvalue())
    logger.info("Чекпойнт %s записан: %s, хэш %s", payload["stage"], path, digest[:12])
    return digest


def load_checkpoint(path: Path, expected_stage: Optional[Stage] = None) -> LoadedCheckpoint:
    """
    Прочитать чекпойнт и восстановить набор моделей.

    Args:
        path: Путь к файлу
        expected_stage: Требуемая стадия (None - любая)

    Raises:
        CheckpointError: Файл отсутствует, повреждён или другого формата
        StageMismatchError: Стадия не совпадает с ожидаемой
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Чекпойнт не найден: {path}", details={"path": str(path)})
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"Не удалось прочитать чекпойнт: {exc}") from exc

    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("Неизвестный формат чекпойнта", details={"path": str(path)})
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"Версия чекпойнта {payload.get('version')} не поддерживается",
            details={"version": payload.get("version")},
        )
    stage = Stage(payload["stage"])
    if expected_stage is not None and stage is not Stage(expected_stage):
        raise StageMismatchError(
            f"Ожидался чекпойнт стадии {Stage(expected_stage).value}, получен {stage.value}",
            details={"expected": Stage(expected_stage).value, "actual": stage.value},
        )

    spec = ModelSpec.from_dict(payload["model_spec"])
    schedule = make_schedule(payload["schedule"]["T"], ScheduleKind(payload["schedule"]["kind"]))
    first = next(iter(payload["components"]["denoiser"].values()))
    bundle = build_bundle(spec, dtype=first.dtype)
    try:
        for name in COMPONENTS:
            getattr(bundle, name).load_state_dict(payload["components"][name])
        if payload.get("control") is not None:
            with torch.random.fork_rng(devices=[]):
                branch = init_from_backbone(
                    bundle.denoiser, spec.latent_channels, spec.factor, spec.adapter_width
                )
            branch.load_state_dict(payload["control"])
            attach(bundle, branch)
    except RuntimeError as exc:
        raise CheckpointError(f"Веса не соответствуют архитектуре: {exc}") from exc

    bundle.freeze_flags = dict(payload["freeze_flags"])
    bundle.apply_freeze()
    logger.info("Чекпойнт загружен: %s (%s)", path, stage.value)
    return LoadedCheckpoint(
        bundle=bundle,
        schedule=schedule,
        stage=stage,
        config_hash=payload["config_hash"],
        content_hash=content_hash(payload),
        parent_hash=payload.get("parent_hash"),
    )
