"""Множитель скорости обучения: линейный разогрев и косинусное затухание до нуля."""

import math

from ..exceptions import TrainConfigError


def lr_multiplier(step: int, total_steps: int, warmup: int) -> float:
    """
    Множитель в [0, 1] для шага step.

    Args:
        step: Номер шага, 0 <= step <= total_steps
        total_steps: Общее число шагов оптимизатора
        warmup: Число шагов разогрева

    Raises:
        TrainConfigError: warmup >= total_steps или step вне диапазона
    """
    if warmup >= total_steps:
        raise TrainConfigError(
            f"Разогрев ({warmup}) должен быть короче обучения ({total_steps})",
            details={"warmup": warmup, "total_steps": total_steps},
        )
    if not 0 <= step <= total_steps:
        raise TrainConfigError(f"Шаг {step} вне [0, {total_steps}]")
    if step < warmup:
        return step / warmup
    progress = (step - warmup) / (total_steps - warmup)
    return 0.5 * (1.0 + math.cos(math.pi * progress))
