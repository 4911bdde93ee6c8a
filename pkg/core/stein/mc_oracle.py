"""
Монте-Карло оракул

Выборки порождаются блоками; блок k использует собственный поток
Philox(SeedSequence(seed, spawn_key=(k,))), поэтому результат не зависит
от числа потоков. Суммы по блокам объединяются через math.fsum.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, List, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .interfaces import NoiseLaw
from .types import (
    SampleBatch, SteinCheck, ExpectedRisk, SteinConfig, SamplingError, get_default_config
)
from .estimators import EstimatorExpr, residual
from .risk import apply_stein
from .kernel import levy_K

logger = logging.getLogger(__name__)

KernelFn = Callable[[EstimatorExpr, np.ndarray], np.ndarray]


def chunk_generator(seed: int, index: int) -> np.random.Generator:
    """Независимый поток для блока index"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _chunk_sizes(n: int, chunk: int) -> List[int]:
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _map_chunks(model: NoiseLaw, n: int, seed: int, fn: Callable[[np.ndarray], object],
                config: SteinConfig, workers: Optional[int] = None) -> list:
    if n < 1:
        raise SamplingError(f"Размер выборки должен быть >= 1: {n}")
    sizes = _chunk_sizes(int(n), config.mc_chunk)

    def job(k: int):
        values = model.sample_chunk(chunk_generator(seed, k), sizes[k])
        return fn(values)

    workers = workers or config.workers
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, range(len(sizes))))
    return [job(k) for k in range(len(sizes))]


def approximation_error(model: NoiseLaw) -> float:
    """Дисперсия малых скачков, заменённых гауссовой частью при моделировании"""
    own = getattr(model, 'approximation_error', None)
    if own is not None:
        return float(own)
    components = getattr(model, 'components', ())
    return math.fsum(k * approximation_error(law) for k, law in components)


def sample(model: NoiseLaw, n: int, seed: int, workers: Optional[int] = None,
           config: Optional[SteinConfig] = None) -> SampleBatch:
    """
    n независимых реализаций закона

    Raises:
        SamplingError: n < 1 или мера скачков не нормируется
    """
    config = config or get_default_config()
    try:
        chunks = _map_chunks(model, n, seed, lambda v: v, config, workers)
    except SamplingError:
        raise
    except (ValueError, FloatingPointError) as e:
        raise SamplingError(f"Ошибка моделирования закона {model.family}: {str(e)}")
    values = np.concatenate(chunks)
    return SampleBatch(model_id=model.model_id, seed=int(seed), values=values,
                       count=int(n), approximation_error=approximation_error(model))


def _paired_stats(parts: List[Tuple[float, float, float, float, int]]):
    """Средние и стандартная ошибка разности из блочных сумм (a, b, d, d², count)"""
    count = sum(p[4] for p in parts)
    mean_a = math.fsum(p[0] for p in parts) / count
    mean_b = math.fsum(p[1] for p in parts) / count
    mean_d = math.fsum(p[2] for p in parts) / count
    mean_d2 = math.fsum(p[3] for p in parts) / count
    var = max(mean_d2 - mean_d * mean_d, 0.0) * count / max(count - 1, 1)
    return mean_a, mean_b, math.sqrt(var / count), count


def _tabulated_K(model: NoiseLaw, g: Callable, theta: float, g_prime: Optional[Callable],
                 config: SteinConfig) -> Callable[[Callable, np.ndarray], np.ndarray]:
    """K(g) произвольной функции: сплайн по квадратурным значениям около θ"""
    half = config.hinge_grid_sigmas * math.sqrt(model.variance)
    grid = np.linspace(theta - half, theta + half, 2001)
    spline = CubicSpline(grid, levy_K(model, g, grid, g_prime=g_prime, config=config))

    def kernel(_g, y: np.ndarray) -> np.ndarray:
        out = spline(y)
        outside = np.abs(y - theta) > half
        if np.any(outside):
            out[outside] = levy_K(model, g, y[outside], g_prime=g_prime, config=config)
        return out

    return kernel


def mc_stein_check(model: NoiseLaw, g: Union[EstimatorExpr, Callable], theta: float, n: int, seed: int,
                   kernel: Optional[KernelFn] = None, workers: Optional[int] = None,
                   g_prime: Optional[Callable] = None,
                   config: Optional[SteinConfig] = None) -> SteinCheck:
    """
    Проверка тождества E K(g)(X+θ) = E X g(X+θ)

    Args:
        model: Закон шума
        g: Остаток оценки (функция g, не d) или любая липшицева функция
            от массива
        theta: Параметр сдвига
        n: Размер выборки
        seed: Зерно
        kernel: Подменённый оператор K (для проверки самой проверки)
        g_prime: Производная g, если g не EstimatorExpr

    Returns:
        SteinCheck: lhs, rhs и стандартная ошибка парной разности
    """
    config = config or get_default_config()
    if isinstance(g, EstimatorExpr):
        g_fn = g.evaluate
        kernel = kernel or (lambda expr, x: apply_stein(model, expr, x))
    else:
        g_fn = lambda y: np.asarray(g(y), dtype=float)
        kernel = kernel or _tabulated_K(model, g, theta, g_prime, config)

    def reduce(x: np.ndarray):
        y = x + theta
        a = kernel(g, y)
        b = x * g_fn(y)
        d = a - b
        return float(np.sum(a)), float(np.sum(b)), float(np.sum(d)), float(np.sum(d * d)), len(x)

    lhs, rhs, se, count = _paired_stats(_map_chunks(model, n, seed, reduce, config, workers))
    logger.debug("Проверка Штейна %s θ=%g: %.6g vs %.6g (se %.3g)", model.family, theta, lhs, rhs, se)
    return SteinCheck(lhs=lhs, rhs=rhs, se=se, n=count, theta=float(theta), model_id=model.model_id)


def mc_risk(model: NoiseLaw, expr: EstimatorExpr, theta: float, n: int, seed: int,
            workers: Optional[int] = None, config: Optional[SteinConfig] = None) -> ExpectedRisk:
    """Монте-Карло оценка E(d(X+θ) - θ)² со стандартной ошибкой"""
    config = config or get_default_config()

    def reduce(x: np.ndarray):
        loss = (expr.evaluate(x + theta) - theta) ** 2
        return float(np.sum(loss)), float(np.sum(loss * loss)), len(x)

    parts = _map_chunks(model, n, seed, reduce, config, workers)
    count = sum(p[2] for p in parts)
    mean = math.fsum(p[0] for p in parts) / count
    mean_sq = math.fsum(p[1] for p in parts) / count
    var = max(mean_sq - mean * mean, 0.0) * count / max(count - 1, 1)
    return ExpectedRisk(value=mean, standard_error=math.sqrt(var / count), method='monte_carlo')


def mc_unbiasedness(model: NoiseLaw, expr: EstimatorExpr, theta: float, n: int, seed: int,
                    kernel: Optional[KernelFn] = None, workers: Optional[int] = None,
                    config: Optional[SteinConfig] = None) -> SteinCheck:
    """
    Парное сравнение E r^(X+θ) и E(d(X+θ) - θ)² на одной выборке

    lhs - средняя оценка риска, rhs - средняя потеря.
    """
    config = config or get_default_config()
    kernel = kernel or (lambda e, x: apply_stein(model, e, x))
    g = residual(expr)
    sigma2 = model.variance

    def reduce(x: np.ndarray):
        y = x + theta
        gy = g.evaluate(y)
        a = sigma2 + gy * gy + 2.0 * kernel(g, y)
        b = (expr.evaluate(y) - theta) ** 2
        d = a - b
        return float(np.sum(a)), float(np.sum(b)), float(np.sum(d)), float(np.sum(d * d)), len(x)

    lhs, rhs, se, count = _paired_stats(_map_chunks(model, n, seed, reduce, config, workers))
    return SteinCheck(lhs=lhs, rhs=rhs, se=se, n=count, theta=float(theta), model_id=model.model_id)
