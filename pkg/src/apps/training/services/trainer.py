"""Двухстадийное обучение: инпейнтинг денойзера и ветвь управления."""

import itertools
import json
import logging
import math
from collections import Counter
from dataclasses import replace
from pathlib import Path
from typing import Optional

import torch

from src.core.files import atomic_write_json

from ...control.services.control_branch import attach, init_from_backbone
from ...dataset.services.slice_cache import SliceCache
from ...diffusion.domain.entities import DenoiserBundle, NoiseSchedule
from ...diffusion.domain.value_objects import ModelSpec, ScheduleKind, Stage
from ...diffusion.services.checkpoint import load_checkpoint, save_checkpoint
from ...diffusion.services.denoising import build_bundle, predict_noise, prepare_conditioning
from ...diffusion.services.masking import masked_mse
from ...diffusion.services.schedule import forward_diffuse, make_schedule
from ..domain.entities import StepLog, TrainingBatch, TrainingResult
from ..domain.value_objects import TrainConfig
from ..exceptions import NonFiniteLossError, TrainConfigError
from .data import SliceTrainingSet, epoch_loader, make_batch
from .lr_schedule import lr_multiplier

logger = logging.getLogger(__name__)

STAGE1_FREEZE = {"autoencoder": True, "text_encoder": True, "denoiser": False, "control": False}
STAGE2_FREEZE = {"autoencoder": True, "text_encoder": True, "denoiser": True, "control": False}


def _param_dtype(bundle: DenoiserBundle) -> torch.dtype:
    return next(bundle.denoiser.parameters()).dtype


def training_step(
    batch: TrainingBatch,
    bundle: DenoiserBundle,
    schedule: NoiseSchedule,
    generator: torch.Generator,
) -> torch.Tensor:
    """
    Маскированная потеря одного микро-батча.

    Для каждого элемента по очереди из генератора берутся шаг t ~ U[1, T]
    и шум eps, поэтому разбиение батча на микро-батчи не меняет поток
    случайных чисел.

    Raises:
        NonFiniteLossError: Потеря не конечна
    """
    dtype = _param_dtype(bundle)
    images = batch.images.to(dtype)
    masks = batch.masks.to(dtype)
    edges = batch.edges.to(dtype) if batch.edges is not None else None

    placeholder = torch.ones(len(batch), dtype=torch.long)
    z0, pack = prepare_conditioning(bundle, images, masks, batch.tokens, placeholder, edges)

    timesteps = []
    noises = []
    for _ in range(len(batch)):
        timesteps.append(torch.randint(1, schedule.T + 1, (1,), generator=generator))
        noises.append(torch.randn(tuple(z0.shape[1:]), generator=generator, dtype=dtype))
    t = torch.cat(timesteps)
    eps = torch.stack(noises)
    pack = replace(pack, timesteps=t)

    z_t = forward_diffuse(z0, t, eps, schedule)
    eps_hat = predict_noise(bundle, z_t, pack)
    loss = masked_mse(eps, eps_hat, pack.latent_mask)

    if not torch.isfinite(loss):
        logger.error(
            "Нечисловая потеря на срезах %s (t=%s)",
            batch.record_ids,
            t.tolist(),
        )
        raise NonFiniteLossError(
            "Потеря не является конечным числом",
            details={
                "indices": batch.indices,
                "record_ids": batch.record_ids,
                "timesteps": t.tolist(),
            },
        )
    return loss


class Trainer:
    """
    Цикл оптимизации одной стадии.

    AdamW по незамороженным параметрам, накопление градиента
    grad_accum микро-батчей, отсечение нормы, разогрев + косинус.
    """

    def __init__(
        self,
        bundle: DenoiserBundle,
        schedule: NoiseSchedule,
        config: TrainConfig,
        log_path: Optional[Path] = None,
    ) -> None:
        self.bundle = bundle
        self.schedule = schedule
        self.config = config
        self.log_path = Path(log_path) if log_path is not None else None
        self.parameters = bundle.trainable_parameters()
        if not self.parameters:
            raise TrainConfigError("Нет обучаемых параметров")
        self.optimizer = torch.optim.AdamW(
            self.parameters,
            lr=config.lr,
            betas=config.betas,
            weight_decay=config.weight_decay,
        )
        self.history: list[StepLog] = []
        self.prompt_audit: Counter = Counter()

    def total_steps(self, dataset_size: int) -> int:
        if self.config.max_steps is not None:
            return self.config.max_steps
        micro_batches = math.ceil(dataset_size / self.config.batch_size)
        return self.config.epochs * math.ceil(micro_batches / self.config.grad_accum)

    def _set_lr(self, step: int, total: int) -> float:
        lr = self.config.lr * lr_multiplier(step, total, self.config.warmup_steps)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        return lr

    def _optimizer_step(self, micro: int) -> float:
        if micro != self.config.grad_accum:
            # Неполное накопление в конце эпохи: среднее по выполненным микро-батчам
            scale = self.config.grad_accum / micro
            for param in self.parameters:
                if param.grad is not None:
                    param.grad.mul_(scale)
        grad_norm = torch.nn.utils.clip_grad_norm_(self.parameters, self.config.grad_clip)
        self.optimizer.step()
        self.optimizer.zero_grad(set_to_none=True)
        return float(grad_norm)

    def _log(self, entry: StepLog) -> None:
        self.history.append(entry)
        if self.log_path is not None:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
        logger.info(
            "Шаг %d (эпоха %d): loss=%.5f lr=%.3e grad_norm=%.4f",
            entry.step,
            entry.epoch,
            entry.loss,
            entry.lr,
            entry.grad_norm,
        )

    def fit(self, dataset: SliceTrainingSet) -> list[StepLog]:
        """Обучить до исчерпания эпох или max_steps."""
        cfg = self.config
        total = self.total_steps(len(dataset))
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self.log_path.write_text("", encoding="utf-8")

        generator = torch.Generator().manual_seed(cfg.seed)
        step = 0
        for module in self.bundle.components().values():
            module.train()
        self.optimizer.zero_grad(set_to_none=True)

        for epoch in itertools.count():
            if step >= total or (cfg.max_steps is None and epoch >= cfg.epochs):
                break
            micro = 0
            running = 0.0
            lr = self._set_lr(step, total)
            loader = epoch_loader(dataset, cfg.batch_size, cfg.seed, epoch, cfg.num_workers)
            for items in loader:
                batch = make_batch(items, dataset, self.bundle.tokenizer, cfg.seed, epoch)
                if epoch == 0:
                    self.prompt_audit.update(batch.prompts)
                loss = training_step(batch, self.bundle, self.schedule, generator)
                (loss / cfg.grad_accum).backward()
                micro += 1
                running += float(loss.detach())
                if micro == cfg.grad_accum:
                    grad_norm = self._optimizer_step(micro)
                    self._log(StepLog(step, epoch, lr, running / micro, grad_norm))
                    step += 1
                    micro, running = 0, 0.0
                    if step >= total:
                        break
                    lr = self._set_lr(step, total)
            if micro > 0 and step < total:
                grad_norm = self._optimizer_step(micro)
                self._log(StepLog(step, epoch, lr, running / micro, grad_norm))
                step += 1
            self.optimizer.zero_grad(set_to_none=True)

        logger.info("Обучение %s завершено: %d шагов", cfg.stage.value, step)
        return self.history


def _configure_determinism(seed: int) -> None:
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)


def _write_training_manifest(
    out_dir: Path,
    config: TrainConfig,
    trainer: Trainer,
    digest: str,
    checkpoint_path: Path,
    parent_hash: Optional[str] = None,
) -> None:
    atomic_write_json(
        out_dir / f"training_{config.stage.value}.json",
        {
            "stage": config.stage.value,
            "config": config.to_dict(),
            "steps": len(trainer.history),
            "final_loss": trainer.history[-1].loss if trainer.history else None,
            "checkpoint": checkpoint_path.name,
            "content_hash": digest,
            "parent_hash": parent_hash,
            "prompt_audit": dict(sorted(trainer.prompt_audit.items())),
        },
    )


def train_stage1(
    cache: SliceCache,
    config: TrainConfig,
    spec: ModelSpec,
    out_dir: Path,
    T: int = 1000,
    schedule_kind: ScheduleKind = ScheduleKind.linear_beta,
    config_hash: str = "",
    resolution: Optional[int] = None,
    dtype: torch.dtype = torch.float32,
) -> TrainingResult:
    """
    Стадия 1: дообучение денойзера на инпейнтинг.

    Автокодировщик и текстовый кодировщик заморожены; используются
    опухолевые срезы с истинными масками и здоровые с заимствованными.

    Raises:
        TrainConfigError: Конфигурация не стадии 1
        EmptyTrainingSplitError: Обучающая выборка пуста
        ResolutionMismatchError: Разрешение кэша не совпадает с конфигурацией
    """
    if config.stage is not Stage.stage1:
        raise TrainConfigError("Для стадии 1 нужна конфигурация stage1")
    out_dir = Path(out_dir)
    _configure_determinism(config.seed)

    dataset = SliceTrainingSet(cache, "train", with_edges=False, resolution=resolution)
    bundle = build_bundle(spec, seed=config.seed, dtype=dtype)
    bundle.freeze_flags = dict(STAGE1_FREEZE)
    bundle.apply_freeze()
    schedule = make_schedule(T, schedule_kind)

    log_path = out_dir / "train_stage1.jsonl"
    trainer = Trainer(bundle, schedule, config, log_path)
    trainer.fit(dataset)

    checkpoint_path = out_dir / "stage1.pt"
    digest = save_checkpoint(checkpoint_path, bundle, schedule, Stage.stage1, config_hash)
    _write_training_manifest(out_dir, config, trainer, digest, checkpoint_path)
    return TrainingResult(
        checkpoint_path=checkpoint_path,
        content_hash=digest,
        steps=len(trainer.history),
        final_loss=trainer.history[-1].loss if trainer.history else float("nan"),
        log_path=log_path,
        history=trainer.history,
    )


def prepare_stage2_bundle(stage1_checkpoint: Path, seed: int) -> tuple[DenoiserBundle, NoiseSchedule, str]:
    """
    Загрузить чекпойнт стадии 1 и подключить свежую ветвь управления.

    Returns:
        (набор моделей, расписание, хэш родительского чекпойнта)

    Raises:
        StageMismatchError: Чекпойнт не стадии 1
    """
    loaded = load_checkpoint(stage1_checkpoint, expected_stage=Stage.stage1)
    bundle = loaded.bundle
    spec = bundle.spec
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        branch = init_from_backbone(bundle.denoiser, spec.latent_channels, spec.factor, spec.adapter_width)
    attach(bundle, branch)
    bundle.freeze_flags = dict(STAGE2_FREEZE)
    bundle.apply_freeze()
    return bundle, loaded.schedule, loaded.content_hash


def train_stage2(
    cache: SliceCache,
    stage1_checkpoint: Path,
    config: TrainConfig,
    out_dir: Path,
    config_hash: str = "",
    resolution: Optional[int] = None,
) -> TrainingResult:
    """
    Стадия 2: обучение ветви управления при полностью замороженной базовой модели.

    Raises:
        TrainConfigError: Конфигурация не стадии 2
        StageMismatchError: Передан чекпойнт не стадии 1
        MissingEdgeCacheError: В кэше нет карт границ
    """
    if config.stage is not Stage.stage2:
        raise TrainConfigError("Для стадии 2 нужна конфигурация stage2")
    out_dir = Path(out_dir)
    _configure_determinism(config.seed)

    dataset = SliceTrainingSet(cache, "train", with_edges=True, resolution=resolution)
    bundle, schedule, parent_hash = prepare_stage2_bundle(stage1_checkpoint, config.seed)

    log_path = out_dir / "train_stage2.jsonl"
    trainer = Trainer(bundle, schedule, config, log_path)
    trainer.fit(dataset)

    checkpoint_path = out_dir / "stage2.pt"
    digest = save_checkpoint(
        checkpoint_path, bundle, schedule, Stage.stage2, config_hash, parent_hash=parent_hash
    )
    _write_training_manifest(out_dir, config, trainer, digest, checkpoint_path, parent_hash)
    return TrainingResult(
        checkpoint_path=checkpoint_path,
        content_hash=digest,
        steps=len(trainer.history),
        final_loss=trainer.history[-1].loss if trainer.history else float("nan"),
        log_path=log_path,
        history=trainer.history,
    )
