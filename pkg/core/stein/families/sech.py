"""
Гиперболический секанс: плотность sech(πx/2)/2, дисперсия 1
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .base import AffineFamily

A = 0.5 * math.pi


def _dilog(w):
    # Li₂(w) = spence(1 - w)
    return special.spence(1.0 - w)


def _slash_antiderivative(z):
    """F(z) = z ln tanh(z/2) + Li₂(-e^{-z}) - Li₂(e^{-z}), F' = z/sinh z, F(∞) = 0"""
    z = np.asarray(z, dtype=float)
    e = np.exp(-z)
    with np.errstate(divide='ignore', invalid='ignore'):
        lead = np.where(z > 0, z * np.log(np.tanh(0.5 * z)), 0.0)
    return lead + _dilog(-e) - _dilog(e)


def sech_hinge(y) -> np.ndarray:
    """
    Скачковый шарнир закона sech в замкнутой форме

    При y > 0: H(y) = 1 + F(ay)/(2a²) - y*ln tanh(ay/2)/(2a), a = π/2;
    H(-y) = 1 - H(y).
    """
    y = np.asarray(y, dtype=float)
    z = np.abs(y)
    with np.errstate(divide='ignore', invalid='ignore'):
        tail_term = np.where(z > 0, z * np.log(np.tanh(0.5 * A * z)) / (2.0 * A), 0.0)
    right = 1.0 + _slash_antiderivative(A * z) / (2.0 * A * A) - tail_term
    return np.where(y >= 0, right, 1.0 - right)


@dataclass(frozen=True)
class SechNoise(AffineFamily):
    """
    Гиперболический секанс единичной дисперсии

    Мера скачков M(dx) = x/(2 sinh(πx/2)) dx (масса 1), ψ(w) = -i tanh w.
    """
    scale: float = 1.0
    shift: float = 0.0

    family = "sech"
    symmetric = True

    @property
    def base_variance(self) -> float:
        return 1.0

    def _base_jump_density(self, x):
        x = np.asarray(x, dtype=float)
        ax = A * np.abs(x)
        with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
            m = np.abs(x) / (2.0 * np.sinh(ax))
        return np.where(ax < 1e-8, 1.0 / math.pi, m)

    def _base_tail(self, r: float) -> float:
        # обе стороны: 2 * (-F(ar)/(2a²))
        return float(-_slash_antiderivative(A * r)) / (A * A)

    def _base_jump_hinge(self, y):
        return sech_hinge(y)

    def _base_psi(self, w):
        return -1j * np.tanh(w)

    def _base_cf(self, w):
        with np.errstate(over='ignore'):
            return (1.0 / np.cosh(w)).astype(complex)

    def _base_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
        return self.quantile(u)

    def _base_pdf(self, x):
        with np.errstate(over='ignore'):
            return 0.5 / np.cosh(A * np.asarray(x, dtype=float))

    @staticmethod
    def cdf(x) -> np.ndarray:
        """F(x) = (2/π) atan(e^{πx/2}) базового закона"""
        with np.errstate(over='ignore'):
            return np.arctan(np.exp(A * np.asarray(x, dtype=float))) / A

    @staticmethod
    def quantile(u) -> np.ndarray:
        """F⁻¹(u) = (2/π) ln tan(πu/2)"""
        return np.log(np.tan(A * np.asarray(u, dtype=float))) / A
