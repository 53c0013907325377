"""Оценка набора сгенерированных срезов: FID, контралатеральный SSIM, доля FP."""

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from src.core.files import atomic_write_bytes, atomic_write_json, read_json

from ...dataset.domain.value_objects import SliceClass
from ...dataset.services.slice_cache import SliceCache
from ..domain.entities import EvalReport, SliceEvaluation
from ..exceptions import EmptySetError, InsufficientSamplesError
from .detector import TumorDetector, fp_rate
from .features import FeatureExtractor, feature_extract
from .fid import fid, fit_gaussian
from .ssim import contralateral_ssim

logger = logging.getLogger(__name__)

PROVENANCE_SUFFIX = "_provenance.json"


@dataclass
class GeneratedSlice:
    record_id: str
    image: np.ndarray
    mask: np.ndarray


def load_generated(directory: Path) -> list[GeneratedSlice]:
    """
    Прочитать результаты реконструкции из каталога экспорта.

    Raises:
        EmptySetError: В каталоге нет результатов
    """
    directory = Path(directory)
    slices = []
    for path in sorted(directory.glob(f"*{PROVENANCE_SUFFIX}")):
        meta = read_json(path)
        files = meta["files"]
        shape = tuple(meta["shape"])
        image = np.frombuffer((directory / files["raw"]).read_bytes(), dtype="<f4").reshape(shape)
        with Image.open(directory / files["mask"]) as mask_image:
            mask = (np.asarray(mask_image) > 0).astype(np.uint8)
        slices.append(GeneratedSlice(meta["record_id"], image.astype(np.float32), mask))
    if not slices:
        raise EmptySetError(f"В {directory} нет результатов реконструкции")
    return slices


def load_reference(cache: SliceCache) -> list[np.ndarray]:
    """Неопухолевые срезы тестовой выборки; при нехватке - все неопухолевые срезы кэша."""
    images = [
        r.image for r in cache.iter_records("test") if r.slice_class is SliceClass.non_tumorous
    ]
    if len(images) < 2:
        logger.warning(
            "В тестовой выборке %d неопухолевых срезов, эталоном служат все неопухолевые срезы",
            len(images),
        )
        images = [r.image for r in cache.iter_records() if r.slice_class is SliceClass.non_tumorous]
    return images


def evaluate(
    generated: Sequence[GeneratedSlice],
    reference: Sequence[np.ndarray],
    extractor: FeatureExtractor,
    detector: TumorDetector,
    config_hash: str = "",
) -> EvalReport:
    """
    Посчитать метрики набора.

    Raises:
        EmptySetError: Нет сгенерированных срезов
        InsufficientSamplesError: Меньше двух срезов в наборе или эталоне
    """
    if not generated:
        raise EmptySetError("Пустой набор сгенерированных срезов")
    if len(generated) < 2 or len(reference) < 2:
        raise InsufficientSamplesError(
            "Для FID нужно не менее двух сгенерированных и двух эталонных срезов",
            details={"generated": len(generated), "reference": len(reference)},
        )

    images = [g.image for g in generated]
    distance = fid(
        fit_gaussian(feature_extract(images, extractor)),
        fit_gaussian(feature_extract(reference, extractor)),
    )
    rate, verdicts = fp_rate(images, detector)
    per_slice = [
        SliceEvaluation(g.record_id, contralateral_ssim(g.image, g.mask), flagged)
        for g, flagged in zip(generated, verdicts)
    ]
    report = EvalReport(
        fid=distance,
        ssim_mean=float(np.mean([s.ssim for s in per_slice])),
        fp_rate=rate,
        config_hash=config_hash,
        per_slice=per_slice,
        extractor=extractor.name,
        detector=detector.name,
    )
    logger.info(
        "Оценка: FID=%.4f SSIM=%.4f FP=%d/%d",
        report.fid,
        report.ssim_mean,
        report.flagged,
        report.total,
    )
    return report


def write_report(report: EvalReport, out_path: Path, csv_path: Optional[Path] = None) -> None:
    """Записать отчёт в JSON и, при необходимости, построчно в CSV."""
    atomic_write_json(Path(out_path), report.to_dict())
    if csv_path is None:
        return
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=["record_id", "ssim", "flagged"], lineterminator="\n")
    writer.writeheader()
    for row in report.per_slice:
        writer.writerow(row.to_dict())
    atomic_write_bytes(Path(csv_path), buffer.getvalue().encode("utf-8"))
