from dataclasses import replace
from pathlib import Path

import pytest
import torch

from src.apps.diffusion.domain.value_objects import ModelSpec, Stage
from src.apps.diffusion.exceptions import (
    CheckpointError,
    ControlBranchMissingError,
    SamplerError,
    ShapeMismatchError,
    StageMismatchError,
)
from src.apps.diffusion.services.checkpoint import load_checkpoint, save_checkpoint
from src.apps.diffusion.services.autoencoders import IdentityAutoencoder, PoolingAutoencoder
from src.apps.diffusion.services.denoising import build_bundle, predict_noise, replicate_channels
from src.apps.diffusion.services.sampler import ddim_timesteps, sample
from src.apps.diffusion.services.schedule import make_schedule

from ..conftest import make_conditioning


def test_predict_noise_shape(tiny_spec: ModelSpec) -> None:
    bundle = build_bundle(tiny_spec)
    z0, pack = make_conditioning(bundle)
    assert predict_noise(bundle, z0, pack).shape == z0.shape
    assert pack.masked_latent.shape == z0.shape
    assert pack.latent_mask.shape == (2, 1, 8, 8)


def test_build_bundle_is_seeded(tiny_spec: ModelSpec) -> None:
    first = build_bundle(tiny_spec, seed=3).denoiser.state_dict()
    second = build_bundle(tiny_spec, seed=3).denoiser.state_dict()
    for key, value in first.items():
        torch.testing.assert_close(value, second[key])


def test_build_bundle_freezes_encoders(tiny_spec: ModelSpec) -> None:
    bundle = build_bundle(tiny_spec)
    assert all(not p.requires_grad for p in bundle.text_encoder.parameters())
    assert all(p.requires_grad for p in bundle.denoiser.parameters())


def test_predict_noise_rejects_edges_without_branch(tiny_spec: ModelSpec) -> None:
    bundle = build_bundle(tiny_spec)
    z0, pack = make_conditioning(bundle, with_edges=True)
    with pytest.raises(ControlBranchMissingError):
        predict_noise(bundle, z0, pack)


def test_predict_noise_rejects_indivisible_latent(tiny_spec: ModelSpec) -> None:
    bundle = build_bundle(tiny_spec)
    z0, pack = make_conditioning(bundle, size=7)
    with pytest.raises(ShapeMismatchError):
        predict_noise(bundle, z0, pack)


def test_replicate_channels() -> None:
    gray = torch.rand(2, 1, 4, 4)
    rgb = replicate_channels(gray, 3)
    assert rgb.shape == (2, 3, 4, 4)
    for channel in range(3):
        torch.testing.assert_close(rgb[:, channel : channel + 1], gray)
    assert replicate_channels(rgb, 3) is rgb
    with pytest.raises(ShapeMismatchError):
        replicate_channels(torch.rand(2, 2, 4, 4), 3)


@pytest.mark.parametrize("autoencoder", [IdentityAutoencoder(1, 3), PoolingAutoencoder(2, 1, 3)])
def test_autoencoder_respects_image_channels(autoencoder) -> None:
    with pytest.raises(ShapeMismatchError):
        autoencoder.encode(torch.rand(1, 1, 8, 8))
    latent = autoencoder.encode(torch.rand(1, 3, 8, 8))
    assert latent.shape[1] == 1
    assert autoencoder.decode(latent).shape == (1, 3, 8, 8)


def test_three_channel_model_accepts_cached_single_channel_slices(tiny_spec: ModelSpec) -> None:
    rgb_spec = replace(tiny_spec, image_channels=3)
    assert build_bundle(rgb_spec).autoencoder.image_channels == 3

    z_gray, pack_gray = make_conditioning(build_bundle(tiny_spec))
    bundle = build_bundle(rgb_spec)
    z_rgb, pack_rgb = make_conditioning(bundle)
    torch.testing.assert_close(z_rgb, z_gray)
    torch.testing.assert_close(pack_rgb.masked_latent, pack_gray.masked_latent)
    assert predict_noise(bundle, z_rgb, pack_rgb).shape == z_rgb.shape


def test_denoiser_gradients_match_finite_differences(tiny_spec: ModelSpec) -> None:
    bundle = build_bundle(tiny_spec, dtype=torch.float64)
    z0, pack = make_conditioning(bundle, batch=1, size=4)
    z = z0.clone().requires_grad_(True)
    assert torch.autograd.gradcheck(lambda x: predict_noise(bundle, x, pack), (z,))


def test_ddim_ladder() -> None:
    ladder = ddim_timesteps(1000, 50)
    assert len(ladder) == 50
    assert ladder[0][0] == 1000
    assert ladder[-1][1] == 0
    starts = [t for t, _ in ladder]
    assert all(a > b for a, b in zip(starts, starts[1:]))
    assert all(t > t_prev for t, t_prev in ladder)
    assert ddim_timesteps(10, 10) == [(10 - i, 9 - i) for i in range(10)]


@pytest.mark.parametrize("steps", [0, 1001])
def test_ddim_rejects_step_count(steps: int) -> None:
    with pytest.raises(SamplerError):
        ddim_timesteps(1000, steps)


def test_sample_is_deterministic(tiny_spec: ModelSpec) -> None:
    bundle = build_bundle(tiny_spec)
    schedule = make_schedule(100)
    z0, pack = make_conditioning(bundle)
    outputs = [
        sample(bundle, schedule, tuple(z0.shape), pack, steps=5, generator=torch.Generator().manual_seed(9))
        for _ in range(2)
    ]
    assert outputs[0].shape == z0.shape
    torch.testing.assert_close(outputs[0], outputs[1])
    assert torch.isfinite(outputs[0]).all()


def test_single_step_sample_is_x0_estimate(tiny_spec: ModelSpec) -> None:
    bundle = build_bundle(tiny_spec, dtype=torch.float64)
    schedule = make_schedule(100)
    z0, pack = make_conditioning(bundle)
    z_T = torch.randn(z0.shape, dtype=torch.float64)

    out = sample(bundle, schedule, tuple(z0.shape), pack, steps=1, z_T=z_T)
    with torch.no_grad():
        eps_hat = predict_noise(bundle, z_T, pack.at_timestep(100))
    ab = float(schedule.alpha_bar[100])
    expected = (z_T - (1 - ab) ** 0.5 * eps_hat) / ab**0.5
    torch.testing.assert_close(out, expected)


def test_checkpoint_roundtrip(tiny_spec: ModelSpec, tmp_path: Path) -> None:
    bundle = build_bundle(tiny_spec, seed=1)
    schedule = make_schedule(50)
    path = tmp_path / "stage1.pt"
    digest = save_checkpoint(path, bundle, schedule, Stage.stage1, config_hash="abc")

    loaded = load_checkpoint(path, expected_stage=Stage.stage1)
    assert loaded.content_hash == digest
    assert loaded.config_hash == "abc"
    assert loaded.schedule.T == 50
    assert loaded.bundle.spec == tiny_spec

    z0, pack = make_conditioning(bundle)
    with torch.no_grad():
        torch.testing.assert_close(
            predict_noise(loaded.bundle, z0, pack), predict_noise(bundle, z0, pack)
        )
    assert save_checkpoint(tmp_path / "again.pt", bundle, schedule, Stage.stage1, "abc") == digest


def test_checkpoint_stage_mismatch(tiny_spec: ModelSpec, tmp_path: Path) -> None:
    path = tmp_path / "stage1.pt"
    save_checkpoint(path, build_bundle(tiny_spec), make_schedule(10), Stage.stage1, "")
    with pytest.raises(StageMismatchError):
        load_checkpoint(path, expected_stage=Stage.stage2)


def test_checkpoint_missing_or_corrupt(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.pt")
    broken = tmp_path / "broken.pt"
    broken.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(broken)
