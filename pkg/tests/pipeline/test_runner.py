import json
from pathlib import Path

import numpy as np
import pytest

from src.apps.dataset.services.slice_cache import SliceCache
from src.apps.diffusion.exceptions import CheckpointError, StageMismatchError
from src.apps.metrics.services.detector import build_detector, fp_rate
from src.apps.metrics.services.ssim import contralateral_ssim
from src.apps.pipeline.domain.value_objects import RUN_RECORD_NAME, Command
from src.apps.pipeline.exceptions import ConfigValidationError, MissingArtifactError, UnknownCommandError
from src.apps.pipeline.exit_codes import (
    EXIT_CONFIG,
    EXIT_MISSING_ARTIFACT,
    EXIT_OK,
    EXIT_RUNTIME,
    EXIT_STAGE_MISMATCH,
    exit_code_for,
)
from src.apps.pipeline.schemas import RunConfig
from src.apps.pipeline.services.config_service import build_config
from src.apps.pipeline.services.runner import run
from src.apps.training.exceptions import NonFiniteLossError
from src.main import main


def _config(tmp_path: Path, data_root: Path, **sections: dict) -> RunConfig:
    raw = {
        "paths": {
            "data_root": str(data_root),
            "cache_dir": str(tmp_path / "cache"),
            "checkpoint_dir": str(tmp_path / "checkpoints"),
            "output_dir": str(tmp_path / "out"),
            "report_dir": str(tmp_path / "reports"),
        },
        **sections,
    }
    return build_config(raw, preset="desk")


def _toml(tmp_path: Path, data_root: Path, *extra: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(
        "\n".join(
            [
                'preset = "desk"',
                "[paths]",
                f'data_root = "{data_root.as_posix()}"',
                f'cache_dir = "{(tmp_path / "cache").as_posix()}"',
                f'checkpoint_dir = "{(tmp_path / "checkpoints").as_posix()}"',
                f'output_dir = "{(tmp_path / "out").as_posix()}"',
                f'report_dir = "{(tmp_path / "reports").as_posix()}"',
                *extra,
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return path


@pytest.mark.parametrize(
    "exc,code",
    [
        (ConfigValidationError("bad"), EXIT_CONFIG),
        (UnknownCommandError("bad"), EXIT_CONFIG),
        (MissingArtifactError("absent"), EXIT_MISSING_ARTIFACT),
        (StageMismatchError("stage"), EXIT_STAGE_MISMATCH),
        (CheckpointError("broken"), EXIT_RUNTIME),
        (NonFiniteLossError("nan"), EXIT_RUNTIME),
        (RuntimeError("boom"), EXIT_RUNTIME),
    ],
)
def test_exit_codes(exc: BaseException, code: int) -> None:
    assert exit_code_for(exc) == code


def test_unknown_command(tmp_path: Path, phantom_root: Path) -> None:
    with pytest.raises(UnknownCommandError):
        run("train-everything", _config(tmp_path, phantom_root))


def test_preprocess_is_idempotent(tmp_path: Path, phantom_root: Path) -> None:
    config = _config(tmp_path, phantom_root)
    first = run(Command.preprocess, config)
    assert not first.skipped
    record = json.loads(first.run_record.read_text(encoding="utf-8"))
    assert record["command"] == "preprocess"
    assert record["config_hash"] == config.config_hash
    assert record["summary"]["records"] > 0
    assert "manifest.json" in record["outputs"]

    second = run(Command.preprocess, config)
    assert second.skipped

    forced = run(Command.preprocess, config, force=True)
    assert forced.outputs == first.outputs


def test_train_controlnet_needs_stage1(tmp_path: Path, phantom_root: Path) -> None:
    config = _config(tmp_path, phantom_root)
    run(Command.preprocess, config)
    with pytest.raises(MissingArtifactError):
        run(Command.train_controlnet, config)


def test_evaluate_needs_reconstructions(tmp_path: Path, phantom_root: Path) -> None:
    with pytest.raises(MissingArtifactError):
        run(Command.evaluate, _config(tmp_path, phantom_root))


def test_make_phantoms_writes_corpus(tmp_path: Path) -> None:
    data_root = tmp_path / "phantoms"
    config = _config(tmp_path, data_root, phantoms={"subjects": 3, "shape": [32, 32, 8]})
    outcome = run(Command.make_phantoms, config)
    assert outcome.summary == {"subjects": 3}
    assert len(list(data_root.glob("*_t1ce.nii.gz"))) == 3
    assert (data_root / RUN_RECORD_NAME).exists()


def test_cli_exit_codes(tmp_path: Path, phantom_root: Path) -> None:
    config_path = _toml(tmp_path, phantom_root)
    assert main(["train-controlnet", "--config", str(config_path)]) == EXIT_MISSING_ARTIFACT

    bad = tmp_path / "bad.toml"
    bad.write_text('[stage1]\nlr = "fast"\n', encoding="utf-8")
    assert main(["preprocess", "--config", str(bad)]) == EXIT_CONFIG

    assert main(["preprocess", "--config", str(config_path)]) == EXIT_OK
    assert (tmp_path / "cache" / RUN_RECORD_NAME).exists()
    assert main(["preprocess", "--config", str(config_path)]) == EXIT_OK


def test_cli_infer_with_auto_mask(tmp_path: Path, phantom_root: Path) -> None:
    config_path = _toml(
        tmp_path,
        phantom_root,
        "[stage1]",
        "max_steps = 2",
        "[stage2]",
        "max_steps = 2",
        "warmup_steps = 0",
        "[inference]",
        "steps = 2",
        "limit = 1",
    )
    for command in (Command.preprocess, Command.train_sd, Command.train_controlnet):
        assert main([command.value, "--config", str(config_path)]) == EXIT_OK

    assert main(["infer", "--config", str(config_path), "--mask", "auto"]) == EXIT_OK
    provenance = list((tmp_path / "out").glob("*_provenance.json"))
    assert len(provenance) == 1
    assert json.loads(provenance[0].read_text(encoding="utf-8"))["mask_source"] == "dilated_tumor"

    missing = ["--mask", str(tmp_path / "absent.png"), "--force"]
    assert main(["infer", "--config", str(config_path), *missing]) == EXIT_MISSING_ARTIFACT


SHORT_RUN = {
    "stage1": {"max_steps": 2},
    "stage2": {"max_steps": 2, "warmup_steps": 0},
    "inference": {"steps": 2, "limit": 2},
}


def _run_all(config: RunConfig) -> None:
    for command in Command:
        if command is not Command.make_phantoms:
            run(command, config)


def _end_to_end(tmp_path: Path, phantom_root: Path, **sections: dict) -> dict:
    _run_all(_config(tmp_path, phantom_root, **sections))
    return json.loads((tmp_path / "reports" / "report.json").read_text(encoding="utf-8"))


def test_short_end_to_end_run(tmp_path: Path, phantom_root: Path) -> None:
    report = _end_to_end(tmp_path, phantom_root, **SHORT_RUN)
    assert report["total"] == 2
    assert report["fid"] >= 0.0
    assert 0.0 <= report["fp_rate"] <= 1.0
    assert len(list((tmp_path / "out").glob("*_provenance.json"))) == 2
    stage2 = json.loads((tmp_path / "checkpoints" / "stage2" / RUN_RECORD_NAME).read_text(encoding="utf-8"))
    assert set(stage2["inputs"]) == {"cache", "stage1"}


def _artifact_bytes(run_dir: Path) -> dict[str, bytes]:
    paths = [
        run_dir / "checkpoints" / "stage1" / "stage1.pt",
        run_dir / "checkpoints" / "stage2" / "stage2.pt",
        run_dir / "reports" / "report.json",
        *(p for p in (run_dir / "out").iterdir() if p.name != RUN_RECORD_NAME),
    ]
    return {p.relative_to(run_dir).as_posix(): p.read_bytes() for p in sorted(paths)}


def test_rerun_with_same_seed_is_byte_identical(
    tmp_path: Path, phantom_root: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    snapshots = []
    for name in ("first", "second"):
        run_dir = tmp_path / name
        run_dir.mkdir()
        # Относительные пути: хэш конфигурации в чекпойнтах и отчёте совпадает
        monkeypatch.chdir(run_dir)
        paths = {
            "data_root": str(phantom_root),
            "cache_dir": "cache",
            "checkpoint_dir": "checkpoints",
            "output_dir": "out",
            "report_dir": "reports",
        }
        _run_all(build_config({"paths": paths, **SHORT_RUN}, preset="desk"))
        snapshots.append(_artifact_bytes(run_dir))

    first, second = snapshots
    assert any(name.endswith("_pseudohealthy.f32") for name in first)
    assert sorted(first) == sorted(second)
    for name, data in first.items():
        assert second[name] == data, name


@pytest.mark.slow
def test_desk_preset_end_to_end(tmp_path: Path, phantom_root: Path) -> None:
    config = _config(tmp_path, phantom_root)
    _run_all(config)
    report = json.loads((tmp_path / "reports" / "report.json").read_text(encoding="utf-8"))
    assert report["total"] >= 2
    assert report["fid"] >= 0.0

    cache = SliceCache(tmp_path / "cache")
    inputs = [cache.read_record(s["record_id"]) for s in report["per_slice"]]
    input_ssim = float(np.mean([contralateral_ssim(r.image, r.inpaint_mask) for r in inputs]))
    assert report["ssim_mean"] > input_ssim

    detector = build_detector(config.metrics.detector, config.metrics.detector_params())
    input_rate, _ = fp_rate([r.image for r in inputs], detector)
    assert report["fp_rate"] <= input_rate
