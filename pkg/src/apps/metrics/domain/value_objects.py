"""Value Objects метрик."""

from dataclasses import dataclass

SSIM_WINDOW = 7
DATA_RANGE = 2.0  # изображения в [-1, 1]
PSD_TOLERANCE = 1e-8
FID_FLOOR = -1e-6

HISTOGRAM_BINS = 64
POOL_SIZE = 8


def ssim_constants(data_range: float = DATA_RANGE) -> tuple[float, float]:
    return (0.01 * data_range) ** 2, (0.03 * data_range) ** 2


@dataclass(frozen=True)
class DetectorParams:
    """Параметры порогового детектора опухоли (Value Object)."""

    patch: int = 20
    percentile: float = 99.0
    margin: float = 0.0
