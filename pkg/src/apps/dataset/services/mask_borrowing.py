"""Заимствование масок для срезов без опухоли."""

import logging
from collections import defaultdict
from typing import Iterable

import numpy as np

from ..domain.entities import SliceRecord
from ..exceptions import EmptyTumorPoolError

logger = logging.getLogger(__name__)

TumorPool = dict[int, list[SliceRecord]]


def build_tumor_pool(records: Iterable[SliceRecord]) -> TumorPool:
    """
    Индексировать опухолевые срезы по номеру среза.

    Кандидаты внутри индекса упорядочены по subject_id, чтобы выбор
    под фиксированным seed не зависел от порядка обхода файлов.
    """
    pool: TumorPool = defaultdict(list)
    for record in records:
        if record.is_tumorous():
            pool[record.slice_index].append(record)
    for candidates in pool.values():
        candidates.sort(key=lambda r: r.subject_id)
    return dict(pool)


def _nearest_index(pool: TumorPool, slice_index: int) -> int:
    available = sorted(k for k, v in pool.items() if v)
    if not available:
        raise EmptyTumorPoolError("Пул опухолевых срезов пуст")
    return min(available, key=lambda k: (abs(k - slice_index), k))


def borrow_mask(
    record: SliceRecord,
    tumor_pool: TumorPool,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Выбрать маску опухоли того же индекса среза.

    Args:
        record: Срез без опухоли
        tumor_pool: Опухолевые срезы по индексу
        rng: Генератор случайных чисел

    Returns:
        Расширенная маска источника (копия)

    Raises:
        EmptyTumorPoolError: Пул пуст целиком
    """
    index = record.slice_index
    if not tumor_pool.get(index):
        fallback = _nearest_index(tumor_pool, index)
        logger.warning(
            "Нет опухолевых срезов с индексом %d для %s, берём ближайший индекс %d",
            index,
            record.record_id,
            fallback,
        )
        index = fallback

    candidates = tumor_pool[index]
    source = candidates[int(rng.integers(len(candidates)))]
    logger.debug("Маска для %s взята у %s", record.record_id, source.record_id)
    return source.inpaint_mask.copy()
