from pathlib import Path

import numpy as np
import pytest
import torch

from src.apps.dataset.domain.value_objects import PreprocessParams
from src.apps.dataset.services.phantoms import make_phantom_volume, write_phantom_subject
from src.apps.dataset.services.preprocess_service import PreprocessService
from src.apps.dataset.services.slice_cache import SliceCache
from src.apps.diffusion.domain.entities import ConditioningPack, DenoiserBundle
from src.apps.diffusion.domain.value_objects import ModelSpec
from src.apps.diffusion.services.denoising import prepare_conditioning
from src.apps.edges.domain.value_objects import CannyParams
from src.apps.training.domain.entities import TrainingResult
from src.apps.training.domain.value_objects import TrainConfig
from src.apps.training.services.trainer import train_stage1, train_stage2

# (с опухолью, возраст)
PHANTOM_SUBJECTS = [
    (True, 70.0),
    (True, None),
    (True, 45.0),
    (True, 58.0),
    (False, 33.0),
    (False, None),
]


def write_phantoms(root: Path, seed: int = 0) -> list[Path]:
    rng = np.random.default_rng(seed)
    paths = []
    for i, (with_tumor, age) in enumerate(PHANTOM_SUBJECTS):
        voxels, seg = make_phantom_volume(
            (64, 64, 16), rng, with_tumor=with_tumor, tumor_radius=(6.0, 6.5)
        )
        paths.append(write_phantom_subject(root, f"Phantom_{i + 1:03d}", voxels, seg, age))
    return paths


@pytest.fixture(scope="session")
def desk_params() -> PreprocessParams:
    return PreprocessParams(
        slice_lo=3,
        slice_hi=12,
        pad_to=64,
        out_size=64,
        dilation_radius=2,
        area_scale=14.0625,
        split_ratio=0.7,
    )


@pytest.fixture(scope="session")
def phantom_root(tmp_path_factory: pytest.TempPathFactory) -> Path:
    root = tmp_path_factory.mktemp("phantoms")
    write_phantoms(root)
    return root


@pytest.fixture(scope="session")
def slice_cache(
    tmp_path_factory: pytest.TempPathFactory,
    phantom_root: Path,
    desk_params: PreprocessParams,
) -> SliceCache:
    cache = SliceCache(tmp_path_factory.mktemp("cache"))
    PreprocessService(desk_params, CannyParams(), seed=0).run(phantom_root, cache)
    return cache


@pytest.fixture
def tiny_spec() -> ModelSpec:
    return ModelSpec(
        image_channels=1,
        latent_channels=1,
        base_width=8,
        channel_mult=(1, 2),
        context_dim=16,
        attention_heads=2,
        adapter_width=4,
    )


@pytest.fixture(scope="session")
def desk_spec() -> ModelSpec:
    return ModelSpec(
        image_channels=1,
        latent_channels=1,
        base_width=32,
        channel_mult=(1, 2),
        context_dim=64,
        attention_heads=4,
        adapter_width=16,
    )


@pytest.fixture(scope="session")
def desk_checkpoints(
    tmp_path_factory: pytest.TempPathFactory,
    slice_cache: SliceCache,
    desk_spec: ModelSpec,
) -> tuple[TrainingResult, TrainingResult]:
    """Обе стадии, обученные с шагами и lr пресета desk."""
    root = tmp_path_factory.mktemp("desk")
    stage1 = train_stage1(
        slice_cache,
        TrainConfig.stage1(batch_size=4, grad_accum=2, lr=1e-3, max_steps=200),
        desk_spec,
        root / "stage1",
        resolution=64,
    )
    stage2 = train_stage2(
        slice_cache,
        stage1.checkpoint_path,
        TrainConfig.stage2(batch_size=4, grad_accum=2, lr=1e-3, warmup_steps=10, max_steps=100),
        root / "stage2",
        resolution=64,
    )
    return stage1, stage2


@pytest.fixture(autouse=True)
def _torch_seed() -> None:
    torch.manual_seed(0)


def make_conditioning(
    bundle: DenoiserBundle,
    batch: int = 2,
    size: int = 8,
    t: int = 500,
    with_edges: bool = False,
) -> tuple[torch.Tensor, ConditioningPack]:
    """Латент и пакет условий на случайных изображениях с квадратной маской."""
    dtype = next(bundle.denoiser.parameters()).dtype
    generator = torch.Generator().manual_seed(123)
    images = torch.rand(batch, 1, size, size, generator=generator, dtype=dtype) * 2 - 1
    masks = torch.zeros(batch, 1, size, size, dtype=dtype)
    masks[:, :, size // 4 : size // 2 + 2, size // 4 : size // 2 + 2] = 1
    tokens = torch.zeros(batch, 77, dtype=torch.long)
    edges = (torch.rand(batch, 1, size, size, generator=generator) > 0.8).to(dtype) if with_edges else None
    return prepare_conditioning(
        bundle, images, masks, tokens, torch.full((batch,), t, dtype=torch.long), edges
    )
