"""Доменные сущности метрик."""

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import FeatureDimensionError, InsufficientSamplesError


@dataclass(frozen=True)
class FeatureStats:
    """Среднее и ковариация признаков набора изображений."""

    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=np.float64))
        if self.n < 2:
            raise InsufficientSamplesError(f"Нужно не менее 2 векторов, получено {self.n}")
        if sigma.shape != (mu.size, mu.size):
            raise FeatureDimensionError(
                "Размер ковариации не совпадает с размерностью среднего",
                details={"mu": mu.size, "sigma": list(sigma.shape)},
            )
        if not np.allclose(sigma, sigma.T, atol=1e-10):
            raise FeatureDimensionError("Ковариация не симметрична")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return int(self.mu.size)


@dataclass
class SliceEvaluation:
    """Оценка одного сгенерированного среза."""

    record_id: str
    ssim: float
    flagged: bool

    def to_dict(self) -> dict:
        return {"record_id": self.record_id, "ssim": self.ssim, "flagged": self.flagged}


@dataclass
class EvalReport:
    """Отчёт оценки набора сгенерированных срезов."""

    fid: float
    ssim_mean: float
    fp_rate: float
    config_hash: str
    per_slice: list[SliceEvaluation] = field(default_factory=list)
    extractor: str = "histogram"
    detector: str = "threshold"

    @property
    def flagged(self) -> int:
        return sum(1 for s in self.per_slice if s.flagged)

    @property
    def total(self) -> int:
        return len(self.per_slice)

    def to_dict(self) -> dict:
        return {
            "fid": self.fid,
            "ssim_mean": self.ssim_mean,
            "fp_rate": self.fp_rate,
            "flagged": self.flagged,
            "total": self.total,
            "config_hash": self.config_hash,
            "extractor": self.extractor,
            "detector": self.detector,
            "per_slice": [s.to_dict() for s in self.per_slice],
        }
