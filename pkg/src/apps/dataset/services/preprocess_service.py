"""Сервис предобработки: объёмы BraTS -> кэш срезов + манифест разбиения."""

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np

from ...edges.domain.value_objects import CannyParams
from ...edges.services.canny import canny_from_params
from ..domain.entities import SliceRecord, SplitManifest
from ..domain.value_objects import PreprocessParams, SliceClass
from ..exceptions import DatasetBaseException, EmptyTumorPoolError
from .mask_borrowing import borrow_mask, build_tumor_pool
from .slice_cache import SliceCache
from .slice_ops import (
    categorize_slice,
    clip_and_normalize,
    dilate_mask,
    extract_slices,
    merge_tumor_labels,
    pad_and_resize,
    scaled_tumor_area,
)
from .split import subject_split
from .volume_loader import discover_subjects, load_volume

logger = logging.getLogger(__name__)


def volume_to_records(path: Path, params: PreprocessParams) -> tuple[list[SliceRecord], int]:
    """
    Превратить один объём в нормализованные срезы.

    Срезы класса excluded не возвращаются, только подсчитываются.

    Returns:
        (срезы, число исключённых срезов)
    """
    volume = load_volume(path)
    records: list[SliceRecord] = []
    excluded = 0
    for raw in extract_slices(volume, params.slice_lo, params.slice_hi):
        native_mask = merge_tumor_labels(raw.seg)
        count = scaled_tumor_area(native_mask, params.area_scale)
        slice_class = categorize_slice(count, params.tumor_min, params.tumor_max)
        if slice_class is SliceClass.excluded:
            excluded += 1
            continue

        image = clip_and_normalize(raw.image, params.clip_percentile)
        image = pad_and_resize(image, params.pad_to, params.out_size, fill=-1.0)
        tumor_mask = pad_and_resize(native_mask, params.pad_to, params.out_size, fill=0)

        if slice_class is SliceClass.tumorous:
            inpaint_mask = dilate_mask(tumor_mask, params.dilation_radius)
        else:
            inpaint_mask = np.zeros_like(tumor_mask)

        records.append(
            SliceRecord(
                image=image,
                tumor_mask=tumor_mask,
                inpaint_mask=inpaint_mask,
                subject_id=volume.subject_id,
                slice_index=raw.slice_index,
                slice_class=slice_class,
                tumor_pixel_count=count,
                age=volume.age,
            )
        )
    return records, excluded


class PreprocessService:
    """
    Сервис подготовки кэша срезов.

    Загрузка объёмов распараллеливается по процессам; запись в кэш
    выполняется последовательно в одном месте.
    """

    def __init__(
        self,
        params: PreprocessParams,
        canny: CannyParams,
        seed: int = 0,
        workers: int = 0,
    ) -> None:
        self._params = params
        self._canny = canny
        self._seed = seed
        self._workers = workers

    def _load_all(self, paths: list[Path]) -> tuple[list[SliceRecord], int]:
        worker = partial(volume_to_records, params=self._params)
        if self._workers > 1:
            with ProcessPoolExecutor(max_workers=self._workers) as pool:
                results = list(pool.map(worker, paths))
        else:
            results = [worker(p) for p in paths]
        records = [r for chunk, _ in results for r in chunk]
        excluded = sum(n for _, n in results)
        return records, excluded

    def _assign_borrowed_masks(
        self,
        records: list[SliceRecord],
        manifest: SplitManifest,
    ) -> list[SliceRecord]:
        rng = np.random.default_rng(self._seed)
        global_pool = build_tumor_pool(records)
        pools = {
            split: build_tumor_pool(r for r in records if manifest.split_of(r.subject_id) == split)
            for split in ("train", "test")
        }
        result = []
        for record in records:
            if record.slice_class is not SliceClass.non_tumorous:
                result.append(record)
                continue
            pool = pools[manifest.split_of(record.subject_id)]
            if not pool:
                logger.warning(
                    "В выборке субъекта %s нет опухолевых срезов, маска берётся из общего пула",
                    record.subject_id,
                )
                pool = global_pool
            if not pool:
                raise EmptyTumorPoolError(
                    "В наборе нет ни одного опухолевого среза для заимствования масок"
                )
            result.append(replace(record, inpaint_mask=borrow_mask(record, pool, rng)))
        return result

    def run(self, data_root: Path, cache: SliceCache) -> SplitManifest:
        """
        Выполнить предобработку.

        Args:
            data_root: Каталог с объёмами BraTS
            cache: Кэш для записи

        Returns:
            Манифест разбиения

        Raises:
            DatasetBaseException: Нет объёмов или ошибка данных
        """
        paths = discover_subjects(data_root)
        if not paths:
            raise DatasetBaseException(
                f"В {data_root} не найдено объёмов", details={"data_root": str(data_root)}
            )

        records, excluded = self._load_all(paths)
        records.sort(key=lambda r: (r.subject_id, r.slice_index))
        manifest = subject_split(
            records,
            ratio=self._params.split_ratio,
            seed=self._seed,
            tolerance=self._params.split_tolerance,
        )
        records = self._assign_borrowed_masks(records, manifest)

        for record in records:
            edges = canny_from_params((record.image + 1.0) / 2.0, self._canny)
            cache.write_record(record, edges, split=manifest.split_of(record.subject_id))

        class_totals = Counter(r.slice_class.value for r in records)
        cache.write_manifest(
            manifest,
            extra={
                "excluded_slices": excluded,
                "class_totals": dict(sorted(class_totals.items())),
                "params": asdict(self._params),
                "canny": asdict(self._canny),
                "volumes": len(paths),
            },
        )
        logger.info(
            "Предобработка завершена: срезов=%d, исключено=%d, объёмов=%d",
            len(records),
            excluded,
            len(paths),
        )
        return manifest
