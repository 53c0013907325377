"""Стратифицированное разбиение по субъектам."""

import logging
from collections import defaultdict
from typing import Sequence

import numpy as np

from ..domain.entities import SliceRecord, SplitManifest
from ..domain.value_objects import SliceClass
from ..exceptions import SplitError

logger = logging.getLogger(__name__)

_COUNTED_CLASSES = (SliceClass.tumorous, SliceClass.non_tumorous)


def _class_counts(records: Sequence[SliceRecord], subjects: set[str]) -> dict[str, int]:
    counts = {cls.value: 0 for cls in _COUNTED_CLASSES}
    for record in records:
        if record.subject_id in subjects and record.slice_class in _COUNTED_CLASSES:
            counts[record.slice_class.value] += 1
    return counts


def _tumorous_share(counts: dict[str, int]) -> float:
    total = sum(counts.values())
    return counts[SliceClass.tumorous.value] / total if total else 0.0


def subject_split(
    records: Sequence[SliceRecord],
    ratio: float = 0.9,
    seed: int = 0,
    tolerance: float = 0.02,
) -> SplitManifest:
    """
    Разбить субъекты на train/test с сохранением доли опухолевых срезов.

    Субъекты упорядочиваются по доле опухолевых срезов (ничьи разрешаются
    случайным ключом из seed), тестовая выборка берётся систематически
    с шагом n / n_test и случайным смещением. Так в тест попадают
    субъекты из всего диапазона долей.

    Args:
        records: Срезы всех субъектов
        ratio: Доля субъектов в обучающей выборке
        seed: Seed разбиения
        tolerance: Допуск расхождения долей классов между выборками

    Returns:
        Манифест разбиения

    Raises:
        SplitError: Меньше двух субъектов или некорректная доля
    """
    if not 0.0 < ratio < 1.0:
        raise SplitError(f"Доля обучающей выборки {ratio} вне (0, 1)")

    per_subject: dict[str, dict[str, int]] = defaultdict(
        lambda: {cls.value: 0 for cls in _COUNTED_CLASSES}
    )
    for record in records:
        counts = per_subject[record.subject_id]
        if record.slice_class in _COUNTED_CLASSES:
            counts[record.slice_class.value] += 1

    subjects = sorted(per_subject)
    if len(subjects) < 2:
        raise SplitError(
            "Для разбиения нужно минимум два субъекта",
            details={"subjects": len(subjects)},
        )

    rng = np.random.default_rng(seed)
    tie_break = rng.random(len(subjects))
    ordered = sorted(
        range(len(subjects)),
        key=lambda i: (_tumorous_share(per_subject[subjects[i]]), tie_break[i]),
    )

    n = len(subjects)
    n_test = min(max(1, int(round(n * (1.0 - ratio)))), n - 1)
    step = n / n_test
    offset = float(rng.uniform(0.0, step))
    test_positions = {min(int(offset + i * step), n - 1) for i in range(n_test)}
    test_subjects = {subjects[ordered[p]] for p in test_positions}
    train_subjects = set(subjects) - test_subjects

    counts = {
        "train": _class_counts(records, train_subjects),
        "test": _class_counts(records, test_subjects),
    }
    gap = abs(_tumorous_share(counts["train"]) - _tumorous_share(counts["test"]))
    if gap > tolerance:
        logger.warning(
            "Доли опухолевых срезов в train/test расходятся на %.3f (допуск %.3f)",
            gap,
            tolerance,
        )

    logger.info(
        "Разбиение по субъектам: train=%d, test=%d, seed=%d",
        len(train_subjects),
        len(test_subjects),
        seed,
    )
    return SplitManifest(
        train_subjects=train_subjects,
        test_subjects=test_subjects,
        seed=seed,
        counts=counts,
    )
