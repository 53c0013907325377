"""Выполнение команд пайплайна и запись run-record."""

import logging
import shutil
import time
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
import torch

from src.core.config import settings
from src.core.files import atomic_write_json, canonical_json, hash_tree, read_json, sha256_bytes

from ...dataset.domain.entities import SliceRecord
from ...dataset.domain.value_objects import SliceClass
from ...dataset.services.phantoms import make_phantom_corpus
from ...dataset.services.preprocess_service import PreprocessService
from ...dataset.services.slice_cache import SliceCache
from ...dataset.services.volume_loader import discover_subjects
from ...diffusion.domain.value_objects import Stage
from ...diffusion.services.checkpoint import load_checkpoint
from ...inference.domain.entities import ReconstructionRequest, ReconstructionResult
from ...inference.domain.value_objects import EdgeMode
from ...inference.services.export import export_result, read_mask
from ...inference.services.reconstruction import ReconstructionService, reconstruct_volume
from ...metrics.services.detector import build_detector
from ...metrics.services.evaluation import (
    PROVENANCE_SUFFIX,
    evaluate,
    load_generated,
    load_reference,
    write_report,
)
from ...metrics.services.features import build_extractor
from ...training.services.trainer import train_stage1, train_stage2
from ..domain.entities import RunOutcome
from ..domain.value_objects import RUN_RECORD_NAME, Command
from ..exceptions import MissingArtifactError, UnknownCommandError
from ..schemas import RunConfig

logger = logging.getLogger(__name__)

STAGE1_CHECKPOINT = "stage1.pt"
STAGE2_CHECKPOINT = "stage2.pt"
NIFTI_SUFFIXES = (".nii", ".nii.gz")


def tree_digest(path: Path) -> dict:
    """Контентный хэш каталога или файла: SHA-256 от списка хэшей файлов (без run-record)."""
    hashes = {
        name: digest for name, digest in hash_tree(path).items() if Path(name).name != RUN_RECORD_NAME
    }
    return {"sha256": sha256_bytes(canonical_json(hashes).encode("utf-8")), "files": len(hashes)}


class PipelineRunner:
    """
    Исполнитель команд по одной конфигурации.

    Каждая команда пишет артефакты в свой каталог и завершает работу
    записью run_record.json; наличие записи означает, что команда уже
    выполнена, и без force повторный запуск ничего не делает.
    """

    def __init__(self, config: RunConfig, force: bool = False) -> None:
        self.config = config
        self.force = force
        paths = config.paths
        self._artifact_dirs: dict[Command, Path] = {
            Command.make_phantoms: paths.data_root,
            Command.preprocess: paths.cache_dir,
            Command.train_sd: paths.checkpoint_dir / Stage.stage1.value,
            Command.train_controlnet: paths.checkpoint_dir / Stage.stage2.value,
            Command.infer: paths.output_dir,
            Command.evaluate: paths.report_dir,
        }
        self._handlers: dict[Command, Callable[[Path], tuple[dict[str, Path], dict]]] = {
            Command.make_phantoms: self._make_phantoms,
            Command.preprocess: self._preprocess,
            Command.train_sd: self._train_sd,
            Command.train_controlnet: self._train_controlnet,
            Command.infer: self._infer,
            Command.evaluate: self._evaluate,
        }

    def artifact_dir(self, command: Command) -> Path:
        return Path(self._artifact_dirs[Command(command)])

    @property
    def stage1_checkpoint(self) -> Path:
        return self.artifact_dir(Command.train_sd) / STAGE1_CHECKPOINT

    @property
    def stage2_checkpoint(self) -> Path:
        return self.artifact_dir(Command.train_controlnet) / STAGE2_CHECKPOINT

    def run(self, command: Command | str) -> RunOutcome:
        """
        Выполнить команду.

        Raises:
            UnknownCommandError: Неизвестная команда
            MissingArtifactError: Нет артефакта предыдущего шага
        """
        try:
            command = Command(command)
        except ValueError as exc:
            raise UnknownCommandError(
                f"Неизвестная команда: {command}",
                details={"available": [c.value for c in Command]},
            ) from exc

        out_dir = self.artifact_dir(command)
        record_path = out_dir / RUN_RECORD_NAME
        if record_path.exists() and not self.force:
            logger.info(
                "Команда %s уже выполнена (%s), пропуск; для повтора укажите --force",
                command.value,
                record_path,
            )
            return RunOutcome(command=command, artifact_dir=out_dir, skipped=True, run_record=record_path)

        if settings.torch_threads:
            torch.set_num_threads(settings.torch_threads)
        out_dir.mkdir(parents=True, exist_ok=True)
        if record_path.exists():
            record_path.unlink()

        logger.info("Команда %s: конфигурация %s", command.value, self.config.config_hash[:12])
        started = time.perf_counter()
        inputs, summary = self._handlers[command](out_dir)
        wall_time = time.perf_counter() - started

        outputs = {
            name: digest
            for name, digest in hash_tree(out_dir).items()
            if name != RUN_RECORD_NAME
        }
        atomic_write_json(
            record_path,
            {
                "command": command.value,
                "preset": self.config.preset.value,
                "seed": self.config.seed,
                "config": self.config.to_document(),
                "config_hash": self.config.config_hash,
                "inputs": {name: tree_digest(path) for name, path in sorted(inputs.items())},
                "outputs": outputs,
                "summary": summary,
                "wall_time_s": round(wall_time, 3),
            },
        )
        logger.info("Команда %s завершена за %.1f с", command.value, wall_time)
        return RunOutcome(
            command=command,
            artifact_dir=out_dir,
            outputs=outputs,
            run_record=record_path,
            summary=summary,
        )

    def _require(self, path: Path, what: str, hint: Command) -> Path:
        if not Path(path).exists():
            raise MissingArtifactError(
                f"Не найден {what}: {path}; сначала выполните '{hint.value}'",
                details={"path": str(path), "command": hint.value},
            )
        return Path(path)

    def _require_cache(self, cache_dir: Path) -> SliceCache:
        cache = SliceCache(cache_dir)
        if not cache.exists():
            raise MissingArtifactError(
                f"Кэш срезов {cache_dir} не найден; сначала выполните 'preprocess'",
                details={"path": str(cache_dir), "command": Command.preprocess.value},
            )
        return cache

    def _make_phantoms(self, out_dir: Path) -> tuple[dict[str, Path], dict]:
        section = self.config.phantoms
        paths = make_phantom_corpus(
            out_dir,
            subjects=section.subjects,
            shape=section.shape,
            seed=self.config.seed,
            tumor_share=section.tumor_share,
        )
        return {}, {"subjects": len(paths)}

    def _preprocess(self, out_dir: Path) -> tuple[dict[str, Path], dict]:
        data_root = self.config.paths.data_root
        if not discover_subjects(data_root):
            raise MissingArtifactError(
                f"В {data_root} нет объёмов; выполните 'make-phantoms' или укажите paths.data_root",
                details={"path": str(data_root)},
            )
        cache = SliceCache(out_dir)
        if self.force:
            shutil.rmtree(cache.records_dir, ignore_errors=True)
            cache.manifest_path.unlink(missing_ok=True)
        service = PreprocessService(
            self.config.preprocess.to_params(),
            self.config.edges.to_params(),
            seed=self.config.seed,
            workers=self.config.preprocess.workers,
        )
        manifest = service.run(data_root, cache)
        summary = {
            "records": len(cache.record_ids()),
            "train_subjects": len(manifest.train_subjects),
            "test_subjects": len(manifest.test_subjects),
        }
        return {"data_root": data_root}, summary

    def _train_sd(self, out_dir: Path) -> tuple[dict[str, Path], dict]:
        cache = self._require_cache(self.config.paths.cache_dir)
        cfg = self.config
        result = train_stage1(
            cache,
            cfg.train_config(Stage.stage1),
            cfg.model.to_spec(),
            out_dir,
            T=cfg.schedule.T,
            schedule_kind=cfg.schedule.kind,
            config_hash=cfg.config_hash,
            resolution=cfg.preprocess.out_size,
            dtype=cfg.model.torch_dtype,
        )
        return {"cache": cache.root}, result.summary()

    def _train_controlnet(self, out_dir: Path) -> tuple[dict[str, Path], dict]:
        cache = self._require_cache(self.config.paths.cache_dir)
        stage1 = self._require(self.stage1_checkpoint, "чекпойнт стадии 1", Command.train_sd)
        result = train_stage2(
            cache,
            stage1,
            self.config.train_config(Stage.stage2),
            out_dir,
            config_hash=self.config.config_hash,
            resolution=self.config.preprocess.out_size,
        )
        return {"cache": cache.root, "stage1": stage1}, result.summary()

    def _inference_checkpoint(self) -> tuple[Path, Stage, Command]:
        section = self.config.inference
        if section.edge_mode is EdgeMode.none:
            default, stage, hint = self.stage1_checkpoint, Stage.stage1, Command.train_sd
        else:
            default, stage, hint = self.stage2_checkpoint, Stage.stage2, Command.train_controlnet
        return Path(section.checkpoint or default), stage, hint

    def _cached_inputs(self, cache: SliceCache) -> list[SliceRecord]:
        section = self.config.inference
        if section.input is not None:
            return [cache.read_record(section.input)]
        records = [r for r in cache.iter_records("test") if r.slice_class is SliceClass.tumorous]
        if not records:
            logger.warning("В тестовой выборке нет опухолевых срезов, используются все опухолевые срезы кэша")
            records = [r for r in cache.iter_records() if r.slice_class is SliceClass.tumorous]
        return records

    def _clear_previous_outputs(self, out_dir: Path) -> None:
        for provenance in out_dir.glob(f"*{PROVENANCE_SUFFIX}"):
            for name in read_json(provenance).get("files", {}).values():
                (out_dir / name).unlink(missing_ok=True)

    def _infer(self, out_dir: Path) -> tuple[dict[str, Path], dict]:
        section = self.config.inference
        checkpoint_path, stage, hint = self._inference_checkpoint()
        self._require(checkpoint_path, f"чекпойнт {stage.value}", hint)
        inputs: dict[str, Path] = {"checkpoint": checkpoint_path}

        mask = None
        if section.mask is not None:
            inputs["mask"] = self._require(section.mask, "файл маски", Command.infer)
            mask = read_mask(section.mask)

        loaded = load_checkpoint(checkpoint_path, expected_stage=stage)
        service = ReconstructionService(loaded, self.config.edges.to_params())
        if self.force:
            self._clear_previous_outputs(out_dir)

        pairs: Iterator[tuple[SliceRecord, ReconstructionResult]]
        if section.input is not None and section.input.endswith(NIFTI_SUFFIXES):
            volume = self._require(Path(section.input), "объём NIfTI", Command.infer)
            inputs["volume"] = volume
            pairs = reconstruct_volume(
                service,
                volume,
                self.config.preprocess.to_params(),
                checkpoint_path,
                section.steps,
                self.config.seed,
                section.edge_mode,
            )
        else:
            cache = self._require_cache(self.config.paths.cache_dir)
            inputs["cache"] = cache.root
            pairs = self._reconstruct_records(service, checkpoint_path, self._cached_inputs(cache), mask)

        exported = 0
        for record, result in pairs:
            export_result(result, record.image, out_dir, with_difference=section.difference_map)
            exported += 1
            if section.limit is not None and exported >= section.limit:
                break
        if exported == 0:
            logger.warning("Нет опухолевых срезов для реконструкции")
        return inputs, {"reconstructed": exported, "checkpoint_hash": loaded.content_hash}

    def _reconstruct_records(
        self,
        service: ReconstructionService,
        checkpoint_path: Path,
        records: list[SliceRecord],
        mask: np.ndarray | None,
    ) -> Iterator[tuple[SliceRecord, ReconstructionResult]]:
        section = self.config.inference
        for record in records:
            request = ReconstructionRequest(
                slice=record,
                checkpoint=checkpoint_path,
                steps=section.steps,
                seed=self.config.seed,
                mask_override=mask,
                edge_mode=section.edge_mode,
            )
            yield record, service.reconstruct(request)

    def _evaluate(self, out_dir: Path) -> tuple[dict[str, Path], dict]:
        section = self.config.metrics
        generated_dir = Path(section.generated or self.config.paths.output_dir)
        if not any(generated_dir.glob(f"*{PROVENANCE_SUFFIX}")):
            raise MissingArtifactError(
                f"В {generated_dir} нет результатов реконструкции; сначала выполните 'infer'",
                details={"path": str(generated_dir), "command": Command.infer.value},
            )
        cache = self._require_cache(Path(section.reference or self.config.paths.cache_dir))

        report = evaluate(
            load_generated(generated_dir),
            load_reference(cache),
            build_extractor(section.extractor),
            build_detector(section.detector, section.detector_params()),
            config_hash=self.config.config_hash,
        )
        report_path = out_dir / section.report_name
        csv_path = report_path.with_suffix(".csv") if section.csv else None
        write_report(report, report_path, csv_path)
        summary = {
            "fid": report.fid,
            "ssim_mean": report.ssim_mean,
            "fp_rate": report.fp_rate,
            "slices": report.total,
        }
        return {"generated": generated_dir, "reference": cache.root}, summary


def run(command: Command | str, config: RunConfig, force: bool = False) -> RunOutcome:
    """Выполнить одну команду пайплайна по конфигурации."""
    return PipelineRunner(config, force=force).run(command)
