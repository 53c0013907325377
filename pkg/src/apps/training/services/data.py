"""Набор обучающих срезов из кэша и сборка микро-батчей с подсказками."""

import logging
from typing import Optional

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset

from ...dataset.domain.value_objects import SliceClass
from ...dataset.services.slice_cache import SliceCache
from ...prompts.domain.entities import PromptSpec
from ...prompts.domain.value_objects import CaseKind
from ...prompts.services.prompt_service import render_prompt, size_category
from ...prompts.services.tokenizer import Tokenizer, tokenize
from ..domain.entities import TrainingBatch
from ..exceptions import EmptyTrainingSplitError, MissingEdgeCacheError, ResolutionMismatchError

logger = logging.getLogger(__name__)


def record_prompt(
    slice_class: SliceClass,
    tumor_pixel_count: int,
    age: Optional[float],
    rng: np.random.Generator,
) -> PromptSpec:
    """Подсказка, описывающая срез: опухолевая с категорией размера или здоровая."""
    if slice_class is SliceClass.tumorous:
        return render_prompt(
            CaseKind.tumorous,
            rng,
            age=age,
            size_desc=size_category(tumor_pixel_count),
        )
    return render_prompt(CaseKind.non_tumorous, rng, age=age)


def prompt_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, epoch, index])


class SliceTrainingSet(Dataset):
    """
    Срезы обучающей выборки кэша.

    Элемент: индекс, изображение (1, H, W), маска инпейнтинга (1, H, W)
    и, если нужны границы, карта границ (1, H, W).
    """

    def __init__(
        self,
        cache: SliceCache,
        split: str = "train",
        with_edges: bool = False,
        resolution: Optional[int] = None,
    ) -> None:
        self.cache = cache
        self.with_edges = with_edges
        self.record_ids = cache.record_ids(split)
        if not self.record_ids:
            raise EmptyTrainingSplitError(
                f"В выборке {split} нет срезов",
                details={"cache": str(cache.root), "split": split},
            )
        self.meta = [cache.sidecar(rid) for rid in self.record_ids]

        if resolution is not None:
            wrong = [m["record_id"] for m in self.meta if m["shape"] != [resolution, resolution]]
            if wrong:
                raise ResolutionMismatchError(
                    f"{len(wrong)} срезов не соответствуют разрешению {resolution}",
                    details={"examples": wrong[:5], "resolution": resolution},
                )
        if with_edges:
            missing = [m["record_id"] for m in self.meta if not m.get("edge_file")]
            if missing:
                raise MissingEdgeCacheError(
                    f"Нет карт границ для {len(missing)} срезов",
                    details={"examples": missing[:5]},
                )

    def __len__(self) -> int:
        return len(self.record_ids)

    def __getitem__(self, index: int) -> dict:
        rid = self.record_ids[index]
        record = self.cache.read_record(rid)
        item = {
            "index": index,
            "image": torch.from_numpy(record.image.astype(np.float32))[None],
            "mask": torch.from_numpy(record.inpaint_mask.astype(np.float32))[None],
        }
        if self.with_edges:
            edges = self.cache.read_edge(rid).edges
            item["edge"] = torch.from_numpy(edges.astype(np.float32))[None]
        return item

    def prompt_for(self, index: int, seed: int, epoch: int) -> PromptSpec:
        meta = self.meta[index]
        return record_prompt(
            SliceClass(meta["class"]),
            int(meta["tumor_pixel_count"]),
            meta.get("age"),
            prompt_rng(seed, epoch, index),
        )


def epoch_order(size: int, seed: int, epoch: int) -> list[int]:
    """Порядок обхода эпохи: перестановка, зависящая только от seed и номера эпохи."""
    return np.random.default_rng([seed, epoch]).permutation(size).tolist()


def epoch_loader(
    dataset: SliceTrainingSet,
    batch_size: int,
    seed: int,
    epoch: int,
    num_workers: int = 0,
) -> DataLoader:
    return DataLoader(
        dataset,
        batch_size=batch_size,
        sampler=epoch_order(len(dataset), seed, epoch),
        num_workers=num_workers,
        drop_last=False,
    )


def make_batch(
    items: dict,
    dataset: SliceTrainingSet,
    tokenizer: Tokenizer,
    seed: int,
    epoch: int,
) -> TrainingBatch:
    """Собрать TrainingBatch из выхода DataLoader, отрисовав подсказки."""
    indices = [int(i) for i in items["index"]]
    prompts = [dataset.prompt_for(i, seed, epoch) for i in indices]
    tokens = torch.tensor(
        [tokenize(p.text, tokenizer).ids for p in prompts],
        dtype=torch.long,
    )
    return TrainingBatch(
        images=items["image"],
        masks=items["mask"],
        tokens=tokens,
        indices=indices,
        record_ids=[dataset.record_ids[i] for i in indices],
        prompts=[p.text for p in prompts],
        edges=items.get("edge"),
    )
