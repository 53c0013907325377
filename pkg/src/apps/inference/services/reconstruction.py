"""
Реконструкция с намеренным рассогласованием: опухолевый срез + маска
+ здоровая подсказка + зеркальная карта границ.
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
import torch

from ...dataset.domain.entities import SliceRecord
from ...dataset.domain.value_objects import PreprocessParams, SliceClass
from ...dataset.services.preprocess_service import volume_to_records
from ...diffusion.domain.entities import LoadedCheckpoint
from ...diffusion.domain.value_objects import Stage
from ...diffusion.services.checkpoint import load_checkpoint
from ...diffusion.services.denoising import prepare_conditioning
from ...diffusion.services.sampler import sample
from ...edges.domain.value_objects import CannyParams
from ...edges.services.canny import canny_from_params
from ...edges.services.mirror import mirror_composite
from ...prompts.domain.entities import PromptSpec
from ...prompts.domain.value_objects import CaseKind
from ...prompts.services.prompt_service import render_prompt
from ...prompts.services.tokenizer import tokenize
from ..domain.entities import Provenance, ReconstructionRequest, ReconstructionResult
from ..domain.value_objects import EdgeMode, MaskSource
from ..exceptions import ControlBranchRequiredError, EmptyMaskError
from .compositing import composite

logger = logging.getLogger(__name__)


def healthy_prompt(age: Optional[float], seed: int) -> PromptSpec:
    """Здоровая подсказка; возраст субъекта, если известен."""
    return render_prompt(CaseKind.non_tumorous, np.random.default_rng(seed), age=age)


def resolve_mask(request: ReconstructionRequest) -> tuple[np.ndarray, MaskSource]:
    """
    Маска реконструкции: явная или расширенная маска опухоли.

    Raises:
        EmptyMaskError: Маска пуста
    """
    if request.mask_override is not None:
        mask, source = request.mask_override, MaskSource.override
    else:
        mask, source = request.slice.inpaint_mask, MaskSource.dilated_tumor
    mask = (np.asarray(mask) > 0).astype(np.uint8)
    if not mask.any():
        raise EmptyMaskError(
            "Пустая маска реконструкции",
            details={"record_id": request.slice.record_id, "source": source.value},
        )
    return mask, source


class ReconstructionService:
    """Реконструкция срезов по загруженному чекпойнту."""

    def __init__(self, checkpoint: LoadedCheckpoint, canny: CannyParams = CannyParams()) -> None:
        self._checkpoint = checkpoint
        self._canny = canny

    def guidance_edges(self, image: np.ndarray, mask: np.ndarray, edge_mode: EdgeMode) -> Optional[np.ndarray]:
        if edge_mode is EdgeMode.none:
            return None
        native = canny_from_params((image + 1.0) / 2.0, self._canny)
        if edge_mode is EdgeMode.native:
            return native.edges
        return mirror_composite(native, mask).edges

    def reconstruct(self, request: ReconstructionRequest) -> ReconstructionResult:
        """
        Реконструировать один срез.

        Raises:
            InvalidRequestError: Некорректный запрос
            EmptyMaskError: Пустая маска
            ControlBranchRequiredError: Границы запрошены, а ветви управления нет
        """
        request.validate()
        bundle = self._checkpoint.bundle
        if request.edge_mode is not EdgeMode.none and bundle.control is None:
            raise ControlBranchRequiredError(
                "Чекпойнт стадии 1 не содержит ветви управления",
                details={"stage": self._checkpoint.stage.value},
            )

        mask, mask_source = resolve_mask(request)
        record = request.slice
        prompt = healthy_prompt(record.age, request.seed)
        edges = self.guidance_edges(record.image, mask, request.edge_mode)

        dtype = next(bundle.denoiser.parameters()).dtype
        image_t = torch.from_numpy(record.image.astype(np.float64)).to(dtype)[None, None]
        mask_t = torch.from_numpy(mask.astype(np.float64)).to(dtype)[None, None]
        tokens = torch.tensor([tokenize(prompt.text, bundle.tokenizer).ids], dtype=torch.long)
        edge_t = (
            torch.from_numpy(edges.astype(np.float64)).to(dtype)[None, None]
            if edges is not None
            else None
        )

        with torch.no_grad():
            z0, pack = prepare_conditioning(
                bundle, image_t, mask_t, tokens, torch.ones(1, dtype=torch.long), edge_t
            )
            generator = torch.Generator().manual_seed(request.seed)
            latent = sample(
                bundle, self._checkpoint.schedule, tuple(z0.shape), pack, request.steps, generator
            )
            decoded = bundle.autoencoder.decode(latent)[0, 0]

        generated = np.clip(decoded.cpu().numpy().astype(np.float32), -1.0, 1.0)
        output = composite(generated, record.image, mask)

        provenance = Provenance(
            record_id=record.record_id,
            prompt=prompt.text,
            template_index=prompt.template_index,
            seed=request.seed,
            steps=request.steps,
            checkpoint_hash=self._checkpoint.content_hash,
            checkpoint_stage=self._checkpoint.stage.value,
            mask_source=mask_source,
            edge_mode=request.edge_mode,
            mask_pixels=int(mask.sum()),
        )
        logger.info(
            "Срез %s реконструирован: маска %d пикселей, шагов %d",
            record.record_id,
            provenance.mask_pixels,
            request.steps,
        )
        return ReconstructionResult(image=output, mask=mask, provenance=provenance, edge_map=edges)


def reconstruct(request: ReconstructionRequest, canny: CannyParams = CannyParams()) -> ReconstructionResult:
    """
    Реконструкция по чекпойнту стадии 2 из запроса.

    Raises:
        StageMismatchError: Передан чекпойнт стадии 1
    """
    if request.edge_mode is EdgeMode.none:
        return reconstruct_baseline(request, canny)
    loaded = load_checkpoint(Path(request.checkpoint), expected_stage=Stage.stage2)
    return ReconstructionService(loaded, canny).reconstruct(request)


def reconstruct_baseline(request: ReconstructionRequest, canny: CannyParams = CannyParams()) -> ReconstructionResult:
    """Инпейнтинг без управления границами по чекпойнту стадии 1."""
    loaded = load_checkpoint(Path(request.checkpoint), expected_stage=Stage.stage1)
    return ReconstructionService(loaded, canny).reconstruct(replace(request, edge_mode=EdgeMode.none))


def reconstruct_volume(
    service: ReconstructionService,
    volume_path: Path,
    params: PreprocessParams,
    checkpoint: Path,
    steps: int,
    seed: int,
    edge_mode: EdgeMode = EdgeMode.mirrored,
) -> Iterator[tuple[SliceRecord, ReconstructionResult]]:
    """Реконструировать все опухолевые срезы объёма NIfTI; выдаёт пары (срез, результат)."""
    records, _ = volume_to_records(Path(volume_path), params)
    tumorous = [r for r in records if r.slice_class is SliceClass.tumorous]
    logger.info("Объём %s: опухолевых срезов %d", volume_path, len(tumorous))
    for record in tumorous:
        request = ReconstructionRequest(
            slice=record,
            checkpoint=Path(checkpoint),
            steps=steps,
            seed=seed,
            edge_mode=edge_mode,
        )
        yield record, service.reconstruct(request)
