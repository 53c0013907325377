from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from src.apps.control.services.control_branch import attach, init_from_backbone
from src.apps.dataset.domain.entities import SliceRecord
from src.apps.dataset.domain.value_objects import SliceClass
from src.apps.dataset.services.phantoms import symmetric_phantom_slice
from src.apps.dataset.services.slice_ops import dilate_mask
from src.apps.diffusion.domain.entities import LoadedCheckpoint
from src.apps.diffusion.domain.value_objects import ModelSpec, Stage
from src.apps.diffusion.exceptions import StageMismatchError
from src.apps.diffusion.services.checkpoint import load_checkpoint, save_checkpoint
from src.apps.diffusion.services.denoising import build_bundle
from src.apps.diffusion.services.schedule import make_schedule
from src.apps.inference.domain.entities import ReconstructionRequest
from src.apps.inference.domain.value_objects import EdgeMode, MaskSource
from src.apps.inference.exceptions import (
    CompositeShapeError,
    ControlBranchRequiredError,
    EmptyMaskError,
    InvalidRequestError,
    MaskFileError,
)
from src.apps.inference.services.compositing import composite
from src.apps.inference.services.export import export_result, read_mask, read_raw, to_uint16
from src.apps.inference.services.reconstruction import ReconstructionService, reconstruct
from src.apps.metrics.services.evaluation import load_generated
from src.apps.metrics.services.ssim import contralateral_ssim
from src.apps.training.domain.entities import TrainingResult


def _loaded(spec: ModelSpec, with_control: bool = True) -> LoadedCheckpoint:
    bundle = build_bundle(spec)
    if with_control:
        attach(bundle, init_from_backbone(bundle.denoiser, spec.latent_channels))
    return LoadedCheckpoint(
        bundle=bundle,
        schedule=make_schedule(20),
        stage=Stage.stage2 if with_control else Stage.stage1,
        config_hash="cfg",
        content_hash="abc123",
    )


def _record(cls: SliceClass = SliceClass.tumorous) -> SliceRecord:
    image = np.random.default_rng(0).uniform(-1, 1, size=(16, 16)).astype(np.float32)
    mask = np.zeros((16, 16), dtype=np.uint8)
    if cls is SliceClass.tumorous:
        mask[4:9, 10:14] = 1
    return SliceRecord(
        image=image,
        tumor_mask=mask,
        inpaint_mask=mask.copy(),
        subject_id="S",
        slice_index=7,
        slice_class=cls,
        tumor_pixel_count=1500 if cls is SliceClass.tumorous else 0,
        age=70.0,
    )


def _request(record: SliceRecord, **kwargs) -> ReconstructionRequest:
    return ReconstructionRequest(slice=record, checkpoint=Path("unused.pt"), steps=3, seed=4, **kwargs)


def test_composite_copies_pixels_outside_mask() -> None:
    rng = np.random.default_rng(1)
    generated, original = rng.random((8, 8)), rng.random((8, 8))
    mask = np.zeros((8, 8), dtype=np.uint8)
    mask[2:5, 2:5] = 1
    out = composite(generated, original, mask)
    np.testing.assert_array_equal(out[mask == 0], original[mask == 0])
    np.testing.assert_array_equal(out[mask == 1], generated[mask == 1])
    with pytest.raises(CompositeShapeError):
        composite(generated, original, np.zeros((8, 9)))


def test_reconstruction_keeps_outside_and_is_reproducible(tiny_spec: ModelSpec) -> None:
    service = ReconstructionService(_loaded(tiny_spec))
    record = _record()
    first = service.reconstruct(_request(record))
    second = service.reconstruct(_request(record))

    outside = record.inpaint_mask == 0
    np.testing.assert_array_equal(first.image[outside], record.image[outside])
    np.testing.assert_array_equal(first.image, second.image)
    assert first.image.min() >= -1.0 and first.image.max() <= 1.0

    provenance = first.provenance
    assert "healthy" in provenance.prompt
    assert "70-year-old" in provenance.prompt
    assert provenance.mask_source is MaskSource.dilated_tumor
    assert provenance.checkpoint_hash == "abc123"
    assert provenance.mask_pixels == 20
    assert first.edge_map is not None and first.edge_map.shape == (16, 16)


def test_override_mask_allows_healthy_slice(tiny_spec: ModelSpec) -> None:
    service = ReconstructionService(_loaded(tiny_spec))
    record = _record(SliceClass.non_tumorous)
    with pytest.raises(InvalidRequestError):
        service.reconstruct(_request(record))

    override = np.zeros((16, 16), dtype=np.uint8)
    override[2:4, 2:4] = 1
    result = service.reconstruct(_request(record, mask_override=override))
    assert result.provenance.mask_source is MaskSource.override
    np.testing.assert_array_equal(result.image[override == 0], record.image[override == 0])


def test_request_validation(tiny_spec: ModelSpec) -> None:
    service = ReconstructionService(_loaded(tiny_spec))
    record = _record()
    with pytest.raises(InvalidRequestError):
        service.reconstruct(ReconstructionRequest(slice=record, checkpoint=Path("x"), steps=0))
    with pytest.raises(InvalidRequestError):
        service.reconstruct(_request(record, mask_override=np.ones((8, 8))))

    empty = _record()
    empty.inpaint_mask[:] = 0
    with pytest.raises(EmptyMaskError):
        service.reconstruct(_request(empty))


def test_stage1_checkpoint_supports_only_unguided_mode(tiny_spec: ModelSpec, tmp_path: Path) -> None:
    loaded = _loaded(tiny_spec, with_control=False)
    service = ReconstructionService(loaded)
    with pytest.raises(ControlBranchRequiredError):
        service.reconstruct(_request(_record()))
    result = service.reconstruct(_request(_record(), edge_mode=EdgeMode.none))
    assert result.edge_map is None

    path = tmp_path / "stage1.pt"
    save_checkpoint(path, loaded.bundle, loaded.schedule, Stage.stage1, "cfg")
    request = ReconstructionRequest(slice=_record(), checkpoint=path, steps=2)
    with pytest.raises(StageMismatchError):
        reconstruct(request)
    baseline = reconstruct(ReconstructionRequest(slice=_record(), checkpoint=path, steps=2, edge_mode=EdgeMode.none))
    assert baseline.provenance.checkpoint_stage == "stage1"


def test_to_uint16_range() -> None:
    assert to_uint16(np.array([-1.0, 0.0, 1.0, 3.0])).tolist() == [0, 32768, 65535, 65535]


def test_export_writes_readable_files(tiny_spec: ModelSpec, tmp_path: Path) -> None:
    record = _record()
    result = ReconstructionService(_loaded(tiny_spec)).reconstruct(_request(record))
    paths = export_result(result, record.image, tmp_path)

    assert set(paths) == {"png", "raw", "mask", "provenance", "difference"}
    np.testing.assert_array_equal(read_raw(paths["raw"], (16, 16)), result.image)
    with Image.open(paths["png"]) as png:
        assert np.asarray(png).dtype == np.uint16
    np.testing.assert_array_equal(read_mask(paths["mask"]), result.mask)

    loaded = load_generated(tmp_path)
    assert [g.record_id for g in loaded] == ["S_007"]
    np.testing.assert_array_equal(loaded[0].image, result.image)


def test_read_mask_formats(tmp_path: Path) -> None:
    mask = np.zeros((6, 6), dtype=np.uint8)
    mask[1:3, 2:5] = 7
    np.save(tmp_path / "mask.npy", mask)
    np.testing.assert_array_equal(read_mask(tmp_path / "mask.npy"), (mask > 0).astype(np.uint8))

    np.save(tmp_path / "cube.npy", np.ones((2, 2, 2)))
    with pytest.raises(MaskFileError):
        read_mask(tmp_path / "cube.npy")
    (tmp_path / "junk.png").write_bytes(b"nope")
    with pytest.raises(MaskFileError):
        read_mask(tmp_path / "junk.png")


def test_expanded_mask_keeps_outside_pixels(tiny_spec: ModelSpec) -> None:
    service = ReconstructionService(_loaded(tiny_spec))
    record = _record()
    larger = dilate_mask(record.inpaint_mask, 5)
    assert 0 < larger.sum() < larger.size

    default = service.reconstruct(_request(record))
    expanded = service.reconstruct(_request(record, mask_override=larger))
    assert expanded.provenance.mask_source is MaskSource.override

    outside = larger == 0
    np.testing.assert_array_equal(default.image[outside], expanded.image[outside])
    np.testing.assert_array_equal(expanded.image[outside], record.image[outside])


@pytest.mark.slow
def test_mirrored_guidance_restores_symmetry_on_phantoms(
    desk_checkpoints: tuple[TrainingResult, TrainingResult],
) -> None:
    _, stage2 = desk_checkpoints
    service = ReconstructionService(load_checkpoint(stage2.checkpoint_path, expected_stage=Stage.stage2))
    improved = 0
    for seed in range(25):
        sick, _, blob = symmetric_phantom_slice(64, np.random.default_rng(seed))
        mask = dilate_mask(blob, 2)
        record = SliceRecord(
            image=sick,
            tumor_mask=blob,
            inpaint_mask=mask,
            subject_id=f"Symmetric_{seed:03d}",
            slice_index=0,
            slice_class=SliceClass.tumorous,
            tumor_pixel_count=int(blob.sum()),
        )
        request = ReconstructionRequest(slice=record, checkpoint=stage2.checkpoint_path, steps=20, seed=seed)
        result = service.reconstruct(request)
        if contralateral_ssim(result.image, mask) > contralateral_ssim(sick, mask):
            improved += 1
    assert improved >= 20
