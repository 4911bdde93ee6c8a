"""
Вейвлет-конвейер

Периодическое ортонормированное DWT (PyWavelets, mode='periodization'),
распространение закона шума в коэффициенты, выбор порога по SURE
для каждого уровня и мягкое пороговое шумоподавление.
"""

import math
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple, Dict, Any

import numpy as np
import pywt
from scipy import optimize

from .interfaces import NoiseLaw
from .types import (
    LevelCoeffs, Decomposition, ThresholdChoice, SteinConfig,
    WaveletError, ThresholdSelectionError, UnsupportedModelError, get_default_config
)
from .families import GenericIDNoise
from .kernel import hinge_kernel
from .noise_models import require_centered

logger = logging.getLogger(__name__)

WAVELETS = {'haar': 'haar', 'd4': 'db2'}
TAP_EPS = 1e-14


def _pywt_name(wavelet: str) -> str:
    try:
        return WAVELETS[wavelet.lower()]
    except (KeyError, AttributeError):
        raise WaveletError(f"Неизвестный вейвлет {wavelet!r}; доступны {sorted(WAVELETS)}")


def _wavedec(signal: np.ndarray, name: str, levels: int) -> List[np.ndarray]:
    with warnings.catch_warnings():
        # глубокие уровни D4 на коротких сигналах: pywt предупреждает о границах
        warnings.simplefilter('ignore', UserWarning)
        return pywt.wavedec(signal, name, mode='periodization', level=levels)


def dwt(signal, wavelet: str, levels: int) -> Decomposition:
    """
    Ортонормированное периодическое разложение

    Args:
        signal: Сигнал длины, кратной 2^levels
        wavelet: 'haar' или 'd4'
        levels: Число уровней

    Returns:
        Decomposition: Аппроксимация уровня levels и детали levels..1

    Raises:
        WaveletError: Некорректная длина или число уровней
    """
    name = _pywt_name(wavelet)
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1:
        raise WaveletError("Ожидается одномерный сигнал")
    if levels < 1:
        raise WaveletError(f"Число уровней должно быть >= 1: {levels}")
    n = len(signal)
    if n == 0 or n % (2 ** levels):
        raise WaveletError(f"Длина сигнала {n} не кратна 2^{levels}")
    coeffs = _wavedec(signal, name, levels)
    approx = LevelCoeffs(level=levels, coeffs=coeffs[0], n_total=n, band='approx')
    details = [LevelCoeffs(level=levels - i, coeffs=c, n_total=n, band='detail')
               for i, c in enumerate(coeffs[1:])]
    return Decomposition(approx=approx, details=details, wavelet=wavelet.lower(), n_total=n)


def idwt(decomposition: Decomposition) -> np.ndarray:
    """Обратное преобразование"""
    name = _pywt_name(decomposition.wavelet)
    arrays = [b.coeffs for b in decomposition.bands]
    return pywt.waverec(arrays, name, mode='periodization')


def level_taps(wavelet: str, level: int, n_total: int, band: str = 'detail') -> np.ndarray:
    """
    Эффективный фильтр анализа одного коэффициента уровня

    Коэффициент равен Σ c_k s_k; для ортонормированного преобразования
    c - результат синтеза единичного коэффициента.
    """
    name = _pywt_name(wavelet)
    if level < 1 or n_total % (2 ** level):
        raise WaveletError(f"Уровень {level} недоступен для длины {n_total}")
    zeros = _wavedec(np.zeros(n_total), name, level)
    index = 0 if band == 'approx' else 1
    if band not in ('approx', 'detail'):
        raise WaveletError(f"Неизвестная полоса: {band}")
    zeros[index][0] = 1.0
    vector = pywt.waverec(zeros, name, mode='periodization')
    scale = np.max(np.abs(vector))
    return vector[np.abs(vector) > TAP_EPS * scale]


def propagate_noise(noise: NoiseLaw, wavelet: str, level: int, n_total: Optional[int] = None,
                    band: str = 'detail') -> NoiseLaw:
    """
    Закон шума в коэффициенте уровня: Σ c_k ε_k для н.о.р. ε_k

    Строится через scale и convolve; одинаковые слагаемые сливаются.

    Raises:
        UnsupportedModelError: Равномерный (не безгранично делимый) шум
    """
    if not noise.is_infinitely_divisible:
        raise UnsupportedModelError(
            "Распространение равномерного шума не поддерживается: свёртки выходят из семейства")
    n_total = n_total or 2 ** level * 8
    taps = level_taps(wavelet, level, n_total, band)
    law = GenericIDNoise.combine([(1, noise.scaled(float(c))) for c in taps])
    logger.debug("Шум уровня %s%d: %d отводов, дисперсия %.6g", band, level, len(taps), law.variance)
    return law


# ==================== SURE ====================

def universal_threshold(n_total: int, sd: float) -> float:
    return math.sqrt(2.0 * math.log(n_total)) * sd if n_total > 1 else 0.0


def sure_curve(coeffs, noise: NoiseLaw, lambdas, config: Optional[SteinConfig] = None) -> np.ndarray:
    """
    R^(λ) = nσ² + Σ min(x², λ²) + 2Σ(h(x-λ) - h(x+λ)) для набора порогов

    Raises:
        ThresholdSelectionError: Пустой массив коэффициентов
    """
    config = config or get_default_config()
    x = np.asarray(coeffs, dtype=float).ravel()
    if x.size == 0:
        raise ThresholdSelectionError("Пустой массив коэффициентов")
    h = hinge_kernel(noise)
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    s_part, d_part = _sure_parts(x, h, lambdas, config)
    return x.size * noise.variance + s_part + 2.0 * d_part


def _sure_parts(x: np.ndarray, h, lambdas: np.ndarray, config: SteinConfig) -> Tuple[np.ndarray, np.ndarray]:
    x2 = x * x
    per = max(1, config.sure_chunk // x.size)
    s_part = np.empty(len(lambdas))
    d_part = np.empty(len(lambdas))
    for start in range(0, len(lambdas), per):
        lam = lambdas[start:start + per, None]
        s_part[start:start + per] = np.sum(np.minimum(x2[None, :], lam * lam), axis=1)
        d_part[start:start + per] = np.sum(h(x[None, :] - lam) - h(x[None, :] + lam), axis=1)
    return s_part, d_part


def _candidates(x: np.ndarray, cap: float, subsample: bool, config: SteinConfig) -> np.ndarray:
    data = np.nextafter(np.minimum(np.abs(x), cap), np.inf)
    data = np.unique(data[data < cap])
    if subsample and len(data) > config.sure_subsample:
        idx = np.unique(np.linspace(0, len(data) - 1, config.sure_subsample).round().astype(int))
        data = data[idx]
    return np.unique(np.concatenate(([0.0], data, [cap])))


def sure_select(coeffs, noise: NoiseLaw, n_total: Optional[int] = None, subsample: bool = False,
                level: int = 0, band: str = 'detail',
                config: Optional[SteinConfig] = None) -> ThresholdChoice:
    """
    Порог мягкого порогового правила, минимизирующий SURE

    Кандидаты - 0, |x_i| (следующее число с плавающей точкой, обрезанное
    до λ_max) и λ_max = √(2 log n)·sd. На интервале между кандидатами
    Σmin(x², λ²) не убывает, а Σ(h(x-λ) - h(x+λ)) не возрастает, что даёт
    нижнюю границу; интервалы с границей ниже лучшего значения уточняются
    ограниченной одномерной минимизацией. При равенстве берётся наибольший λ.

    Raises:
        ThresholdSelectionError: Пустой массив коэффициентов
        UnsupportedModelError: Шум не безгранично делим
    """
    config = config or get_default_config()
    x = np.asarray(coeffs, dtype=float).ravel()
    if x.size == 0:
        raise ThresholdSelectionError("Пустой массив коэффициентов")
    if not noise.is_infinitely_divisible:
        raise UnsupportedModelError("Выбор порога требует монотонного шарнирного ядра (безгранично делимый шум)")
    require_centered(noise, "Выбор порога")
    n_total = int(n_total or x.size)
    h = hinge_kernel(noise)
    sigma2 = noise.variance
    base = x.size * sigma2
    cap = universal_threshold(n_total, math.sqrt(sigma2))

    cands = _candidates(x, cap, subsample, config)
    s_part, d_part = _sure_parts(x, h, cands, config)
    risks = base + s_part + 2.0 * d_part
    best = float(np.min(risks))
    best_lam = float(cands[np.flatnonzero(risks == best)[-1]])

    def risk_at(lam: float) -> float:
        s, d = _sure_parts(x, h, np.array([lam]), config)
        return float(base + s[0] + 2.0 * d[0])

    if len(cands) > 1:
        lower = base + s_part[:-1] + 2.0 * d_part[1:]
        order = np.argsort(lower, kind='stable')
        refined = 0
        for j in order:
            if lower[j] >= best:
                break
            if refined >= config.refine_intervals:
                logger.warning("SURE: достигнут предел уточнения %d интервалов", config.refine_intervals)
                break
            refined += 1
            a, b = float(cands[j]), float(cands[j + 1])
            res = optimize.minimize_scalar(risk_at, bounds=(a, b), method='bounded',
                                           options={'xatol': 1e-12 * max(1.0, b)})
            value = float(res.fun)
            if value < best:
                best, best_lam = value, float(res.x)

    logger.info("SURE %s%d: λ=%.6g, R^=%.6g, кандидатов %d", band, level, best_lam, best, len(cands))
    return ThresholdChoice(level=level, lambda_=best_lam, risk=best, n_candidates=int(len(cands)),
                           noise_variance=sigma2, band=band, noise_id=noise.model_id)


def soft_threshold(coeffs, lam: float) -> np.ndarray:
    return pywt.threshold(np.asarray(coeffs, dtype=float), lam, mode='soft')


def denoise(signal, wavelet: str, levels: int, noise: NoiseLaw, keep_low_levels: int = 1,
            fixed_lambda: Optional[float] = None, subsample: bool = False,
            workers: Optional[int] = None,
            config: Optional[SteinConfig] = None) -> Tuple[np.ndarray, List[ThresholdChoice]]:
    """
    SureShrink-шумоподавление

    Полосы упорядочены от грубых к мелким (аппроксимация, детали J..1);
    первые keep_low_levels проходят без порога.

    Args:
        signal: Зашумлённый сигнал
        wavelet: 'haar' или 'd4'
        levels: Глубина разложения
        noise: Центрированный закон шума отсчётов
        keep_low_levels: Число грубых полос без порога
        fixed_lambda: Фиксированный порог вместо SURE
        subsample: Ограничить число кандидатов порога

    Returns:
        (сигнал, отчёт по полосам)
    """
    config = config or get_default_config()
    if keep_low_levels < 0:
        raise WaveletError("keep_low_levels должен быть >= 0")
    require_centered(noise, "Шумоподавление")
    decomposition = dwt(signal, wavelet, levels)
    bands = decomposition.bands
    n_total = decomposition.n_total

    def process(i: int) -> ThresholdChoice:
        band = bands[i]
        band.noise = propagate_noise(noise, wavelet, band.level, n_total, band.band)
        if i < keep_low_levels:
            return ThresholdChoice(level=band.level, lambda_=0.0, risk=None, n_candidates=0,
                                   noise_variance=band.noise.variance, band=band.band,
                                   noise_id=band.noise.model_id)
        if fixed_lambda is not None:
            risk = float(sure_curve(band.coeffs, band.noise, [fixed_lambda], config)[0])
            choice = ThresholdChoice(level=band.level, lambda_=float(fixed_lambda), risk=risk,
                                     n_candidates=1, noise_variance=band.noise.variance, band=band.band,
                                     noise_id=band.noise.model_id)
        else:
            choice = sure_select(band.coeffs, band.noise, n_total, subsample=subsample,
                                 level=band.level, band=band.band, config=config)
        band.coeffs = soft_threshold(band.coeffs, choice.lambda_)
        return choice

    workers = workers or config.workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            report = list(pool.map(process, range(len(bands))))
    else:
        report = [process(i) for i in range(len(bands))]
    return idwt(decomposition), report


def denoise_report(report: List[ThresholdChoice]) -> Dict[str, Any]:
    return {'levels': [choice.to_dict() for choice in report]}
