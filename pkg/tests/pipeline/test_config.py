from pathlib import Path

import pytest

from src.apps.diffusion.domain.value_objects import Stage
from src.apps.pipeline.exceptions import ConfigValidationError
from src.apps.pipeline.schemas import Preset
from src.apps.pipeline.services.config_service import build_config, validate_config


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_desk_config(tmp_path: Path) -> None:
    config = validate_config(_write(tmp_path, 'preset = "desk"\nseed = 3\n'))
    assert config.preset is Preset.desk
    assert config.seed == 3
    assert config.preprocess.out_size == 64
    assert config.preprocess.area_scale == pytest.approx(14.0625)
    assert config.model.autoencoder == "identity"
    assert config.metrics.margin == pytest.approx(-0.2)
    assert config.train_config(Stage.stage1).seed == 3


def test_paper_preset_full_scale_values() -> None:
    config = build_config({}, preset="paper")
    assert (config.preprocess.slice_lo, config.preprocess.slice_hi) == (80, 130)
    assert config.preprocess.clip_percentile == 99.5
    assert (config.preprocess.pad_to, config.preprocess.out_size) == (256, 512)
    assert config.preprocess.dilation_radius == 5
    assert (config.edges.kernel, config.edges.sigma, config.edges.low, config.edges.high) == (5, 1.0, 30.0, 80.0)
    assert config.model.factor == 8
    assert config.schedule.T == 1000

    stage1 = config.train_config(Stage.stage1)
    assert (stage1.batch_size, stage1.grad_accum, stage1.epochs, stage1.lr) == (8, 4, 30, 5e-5)
    stage2 = config.train_config(Stage.stage2)
    assert (stage2.epochs, stage2.lr, stage2.warmup_steps) == (20, 5e-4, 500)
    assert config.inference.steps == 50


def test_wrong_type_names_the_key(tmp_path: Path) -> None:
    with pytest.raises(ConfigValidationError) as info:
        validate_config(_write(tmp_path, '[stage1]\nlr = "fast"\n'))
    assert any(error.startswith("stage1.lr") for error in info.value.errors)


def test_unknown_key_is_rejected(tmp_path: Path) -> None:
    with pytest.raises(ConfigValidationError) as info:
        validate_config(_write(tmp_path, "[stage1]\nlearning_rate = 0.1\n"))
    assert any(error.startswith("stage1.learning_rate") for error in info.value.errors)


def test_every_bad_key_is_reported(tmp_path: Path) -> None:
    text = '[stage1]\nlr = "fast"\n[edges]\nkernel = 4\n'
    with pytest.raises(ConfigValidationError) as info:
        validate_config(_write(tmp_path, text))
    assert len(info.value.errors) >= 2


def test_cli_preset_wins_over_file(tmp_path: Path) -> None:
    config = validate_config(_write(tmp_path, 'preset = "paper"\n'), preset="desk")
    assert config.preset is Preset.desk


def test_overrides_and_seed_change_hash() -> None:
    base = build_config({})
    assert build_config({}).config_hash == base.config_hash
    assert build_config({}, seed=9).config_hash != base.config_hash
    overridden = build_config({}, overrides={"inference": {"steps": 5}})
    assert overridden.inference.steps == 5


def test_semantic_checks() -> None:
    with pytest.raises(ConfigValidationError):
        build_config({"preprocess": {"slice_lo": 12, "slice_hi": 3}})
    with pytest.raises(ConfigValidationError):
        build_config({"edges": {"low": 90.0}})
    with pytest.raises(ConfigValidationError) as info:
        build_config({"preprocess": {"out_size": 63, "pad_to": 63}})
    assert "out_size" in " ".join(info.value.errors)
    with pytest.raises(ConfigValidationError):
        build_config({"preset": "huge"})


def test_file_problems(tmp_path: Path) -> None:
    with pytest.raises(ConfigValidationError):
        validate_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigValidationError):
        validate_config(_write(tmp_path, "seed = = 1\n"))

    occupied = tmp_path / "occupied"
    occupied.write_text("", encoding="utf-8")
    with pytest.raises(ConfigValidationError) as info:
        build_config({"paths": {"cache_dir": str(occupied)}})
    assert info.value.errors[0].startswith("paths.cache_dir")


@pytest.mark.parametrize("value", ["auto", "AUTO", " auto "])
def test_auto_mask_selects_dilated_tumor_mask(value: str) -> None:
    assert build_config({"inference": {"mask": value}}).inference.mask is None
    explicit = build_config({"inference": {"mask": "masks/roi.png"}})
    assert explicit.inference.mask == Path("masks/roi.png")


@pytest.mark.parametrize(
    "preprocess",
    [{"tumor_min": 500}, {"tumor_max": 3500}, {"tumor_min": 999, "tumor_max": 2000}],
)
def test_tumor_range_stays_within_prompt_size_bins(preprocess: dict) -> None:
    with pytest.raises(ConfigValidationError) as info:
        build_config({"preprocess": preprocess})
    assert any(error.startswith("preprocess.tumor_") for error in info.value.errors)
    assert build_config({"preprocess": {"tumor_min": 1200, "tumor_max": 2800}}).preprocess.tumor_min == 1200
