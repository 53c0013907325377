"""Value Objects оркестрации."""

from enum import Enum

RUN_RECORD_NAME = "run_record.json"


class Command(str, Enum):
    make_phantoms = "make-phantoms"        # Синтетический корпус
    preprocess = "preprocess"              # Кэш срезов
    train_sd = "train-sd"                  # Стадия 1
    train_controlnet = "train-controlnet"  # Стадия 2
    infer = "infer"                        # Реконструкция
    evaluate = "evaluate"                  # Метрики
