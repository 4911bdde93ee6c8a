"""
Шум Лапласа единичной дисперсии (плотность e^{-√2|x|}/√2)
"""

import math
from dataclasses import dataclass
from typing import Dict, Any

import numpy as np

from .base import AffineFamily

SQRT2 = math.sqrt(2.0)


def laplace_convolution_kernel(x) -> np.ndarray:
    """
    Свёрточное ядро оператора K для Лапласа: K(g) = k * g

    k(x) = -e^{-√2|x|} sgn(x)
    """
    x = np.asarray(x, dtype=float)
    return -np.exp(-SQRT2 * np.abs(x)) * np.sign(x)


def laplace_hinge(y) -> np.ndarray:
    """h(y) = e^{√2y}/2 при y <= 0 и 1 - e^{-√2y}/2 при y > 0"""
    y = np.asarray(y, dtype=float)
    e = 0.5 * np.exp(-SQRT2 * np.abs(y))
    return np.where(y <= 0, e, 1.0 - e)


def laplace_hinge_slope(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.exp(-SQRT2 * np.abs(y)) / SQRT2


@dataclass(frozen=True)
class LaplaceNoise(AffineFamily):
    """Лаплас единичной дисперсии, масштабированный на scale и сдвинутый на shift"""
    scale: float = 1.0
    shift: float = 0.0

    family = "laplace"
    symmetric = True

    @property
    def base_variance(self) -> float:
        return 1.0

    def _base_jump_density(self, x):
        # M(dx) = |x| e^{-√2|x|} dx, полная масса 1
        x = np.asarray(x, dtype=float)
        return np.abs(x) * np.exp(-SQRT2 * np.abs(x))

    def _base_tail(self, r: float) -> float:
        return 2.0 * math.exp(-SQRT2 * r) * (r / SQRT2 + 0.5)

    def _base_jump_hinge(self, y):
        return laplace_hinge(y)

    def _base_psi(self, w):
        return -2j * w / (2.0 + w * w)

    def _base_cf(self, w):
        return (2.0 / (2.0 + w * w)).astype(complex)

    def _base_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # обратная функция распределения
        u = rng.random(n)
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
        return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u))) / SQRT2

    def _base_pdf(self, x):
        return np.exp(-SQRT2 * np.abs(x)) / SQRT2

    def _base_breakpoints(self):
        return (0.0,)

    def _params(self) -> Dict[str, Any]:
        return {}
