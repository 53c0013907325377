"""Расстояние Фреше между гауссовыми приближениями наборов признаков."""

import logging
from typing import Sequence

import numpy as np
import scipy.linalg

from ..domain.entities import FeatureStats
from ..domain.value_objects import FID_FLOOR, PSD_TOLERANCE
from ..exceptions import FeatureDimensionError, InsufficientSamplesError, NonPSDCovarianceError

logger = logging.getLogger(__name__)


def fit_gaussian(features: Sequence[Sequence[float]] | np.ndarray) -> FeatureStats:
    """
    Выборочное среднее и несмещённая ковариация.

    Raises:
        InsufficientSamplesError: Меньше двух векторов
        FeatureDimensionError: Векторы разной длины
    """
    if len(features) < 2:
        raise InsufficientSamplesError(f"Нужно не менее 2 векторов, получено {len(features)}")
    lengths = {len(np.atleast_1d(v)) for v in features}
    if len(lengths) != 1:
        raise FeatureDimensionError(
            "Векторы признаков разной размерности",
            details={"dims": sorted(lengths)},
        )
    data = np.asarray([np.atleast_1d(v) for v in features], dtype=np.float64)
    mu = data.mean(axis=0)
    centered = data - mu
    sigma = centered.T @ centered / (data.shape[0] - 1)
    return FeatureStats(mu=mu, sigma=sigma, n=data.shape[0])


def merge_stats(a: FeatureStats, b: FeatureStats) -> FeatureStats:
    """Объединить статистики двух частей набора (попарная формула среднего и ковариации)."""
    if a.dim != b.dim:
        raise FeatureDimensionError(
            "Размерности статистик не совпадают",
            details={"a": a.dim, "b": b.dim},
        )
    n = a.n + b.n
    delta = b.mu - a.mu
    mu = a.mu + delta * (b.n / n)
    m2 = a.sigma * (a.n - 1) + b.sigma * (b.n - 1) + np.outer(delta, delta) * (a.n * b.n / n)
    return FeatureStats(mu=mu, sigma=m2 / (n - 1), n=n)


def _clamped_eigenvalues(matrix: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    values, vectors = scipy.linalg.eigh((matrix + matrix.T) / 2.0)
    if values.min(initial=0.0) < -PSD_TOLERANCE:
        raise NonPSDCovarianceError(
            f"Матрица {name} не положительно полуопределена",
            details={"min_eigenvalue": float(values.min())},
        )
    return np.clip(values, 0.0, None), vectors


def sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    """Квадратный корень симметричной PSD-матрицы через собственное разложение."""
    values, vectors = _clamped_eigenvalues(matrix, "sigma")
    return (vectors * np.sqrt(values)) @ vectors.T


def fid(a: FeatureStats, b: FeatureStats) -> float:
    """
    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    След корня вычисляется как сумма корней собственных чисел
    симметричной матрицы S_a^(1/2) S_b S_a^(1/2).

    Raises:
        FeatureDimensionError: Размерности не совпадают
        NonPSDCovarianceError: Отрицательные собственные числа сверх допуска
    """
    if a.dim != b.dim:
        raise FeatureDimensionError(
            "Размерности статистик не совпадают",
            details={"a": a.dim, "b": b.dim},
        )
    if np.array_equal(a.mu, b.mu) and np.array_equal(a.sigma, b.sigma):
        return 0.0

    root_a = sqrt_psd(a.sigma)
    middle = root_a @ b.sigma @ root_a
    values, _ = _clamped_eigenvalues(middle, "S_a^1/2 S_b S_a^1/2")
    trace_sqrt = float(np.sqrt(values).sum())

    diff = a.mu - b.mu
    value = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * trace_sqrt)
    if value < FID_FLOOR:
        logger.warning("FID отрицателен (%.3e), значение обрезано до 0", value)
    return max(value, 0.0)
