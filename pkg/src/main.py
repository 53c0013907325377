import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from src.apps.pipeline.domain.value_objects import Command
from src.apps.pipeline.exceptions import ConfigValidationError
from src.apps.pipeline.exit_codes import EXIT_OK, report_failure
from src.apps.pipeline.services.config_service import validate_config
from src.apps.pipeline.services.runner import run
from src.core.logging_config import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudohealthy",
        description="Псевдоздоровая реконструкция срезов МРТ мозга",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML-файл конфигурации")
    common.add_argument("--preset", choices=["desk", "paper"], default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--force", action="store_true", help="Перезаписать существующие артефакты")

    commands = parser.add_subparsers(dest="command", required=True)
    for command in (Command.make_phantoms, Command.preprocess, Command.train_sd, Command.train_controlnet):
        commands.add_parser(command.value, parents=[common])

    infer = commands.add_parser(Command.infer.value, parents=[common])
    infer.add_argument("--checkpoint", type=Path)
    infer.add_argument("--input", help="ID среза в кэше или путь к объёму NIfTI")
    infer.add_argument(
        "--mask", help="Маска реконструкции (.npy или PNG) или auto: расширенная маска опухоли"
    )
    infer.add_argument("--steps", type=int)
    infer.add_argument("--edge-mode", choices=["mirrored", "native", "none"])
    infer.add_argument("--out", type=Path, help="Каталог результатов")

    evaluate = commands.add_parser(Command.evaluate.value, parents=[common])
    evaluate.add_argument("--generated", type=Path)
    evaluate.add_argument("--reference", type=Path, help="Каталог кэша срезов с эталоном")
    evaluate.add_argument("--detector")
    evaluate.add_argument("--out", type=Path, help="Путь отчёта JSON")
    return parser


def _set(overrides: dict, section: str, key: str, value) -> None:
    if value is not None:
        overrides.setdefault(section, {})[key] = str(value) if isinstance(value, Path) else value


def cli_overrides(args: argparse.Namespace) -> dict:
    """Переопределения конфигурации из аргументов команды."""
    overrides: dict = {}
    if args.command == Command.infer.value:
        _set(overrides, "inference", "checkpoint", args.checkpoint)
        _set(overrides, "inference", "input", args.input)
        _set(overrides, "inference", "mask", args.mask)
        _set(overrides, "inference", "steps", args.steps)
        _set(overrides, "inference", "edge_mode", args.edge_mode)
        _set(overrides, "paths", "output_dir", args.out)
    elif args.command == Command.evaluate.value:
        _set(overrides, "metrics", "generated", args.generated)
        _set(overrides, "metrics", "reference", args.reference)
        _set(overrides, "metrics", "detector", args.detector)
        if args.out is not None:
            if args.out.suffix == ".json":
                _set(overrides, "paths", "report_dir", args.out.parent)
                _set(overrides, "metrics", "report_name", args.out.name)
            else:
                _set(overrides, "paths", "report_dir", args.out)
    return overrides


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        config = validate_config(
            args.config,
            preset=args.preset,
            seed=args.seed,
            overrides=cli_overrides(args),
        )
        outcome = run(args.command, config, force=args.force)
    except ConfigValidationError as exc:
        for error in exc.errors:
            logger.error("Ошибка конфигурации: %s", error)
        return report_failure(exc)
    except Exception as exc:
        return report_failure(exc)
    if outcome.skipped:
        logger.info("Артефакты %s уже существуют", outcome.artifact_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
