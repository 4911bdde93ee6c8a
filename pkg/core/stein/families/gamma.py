"""
Центрированный гамма-шум: G - t, G ~ Gamma(t, 1)
"""

import math
from dataclasses import dataclass
from typing import Dict, Any, Tuple

import numpy as np
from scipy import stats

from .base import AffineFamily
from ..types import PreconditionError


@dataclass(frozen=True)
class GammaNoise(AffineFamily):
    """
    Центрированный гамма-закон формы shape

    Мера скачков M(dx) = t x e^{-x} dx на (0, ∞); шарнир h(y) = t*min(e^y, 1).
    Оператор: K(g)(x) = t∫₀^∞ e^{-u} g(x+u) du - t g(x).
    """
    shape: float = 1.0
    scale: float = 1.0
    shift: float = 0.0

    family = "gamma"
    _positive_jumps = True

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise PreconditionError(f"Форма гамма-закона должна быть > 0: {self.shape}")
        super().__post_init__()

    @property
    def base_variance(self) -> float:
        return self.shape

    def _base_jump_density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self.shape * x * np.exp(-np.maximum(x, 0.0)), 0.0)

    def _base_tail(self, r: float) -> float:
        return self.shape * (r + 1.0) * math.exp(-r)

    def _base_jump_hinge(self, y):
        y = np.asarray(y, dtype=float)
        return self.shape * np.exp(np.minimum(y, 0.0))

    def _base_psi(self, w):
        return -1j * self.shape * w / (1.0 + 1j * w)

    def _base_cf(self, w):
        w = np.asarray(w, dtype=float)
        return np.exp(-self.shape * np.log(1.0 - 1j * w) - 1j * self.shape * w)

    def _base_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.gamma(self.shape, 1.0, n) - self.shape

    def _base_pdf(self, x):
        return stats.gamma.pdf(np.asarray(x, dtype=float) + self.shape, self.shape)

    def _base_density_support(self) -> Tuple[float, float]:
        return (-self.shape, float(stats.gamma.isf(1e-17, self.shape)) - self.shape)

    def _base_breakpoints(self):
        return (-self.shape,)

    def _params(self) -> Dict[str, Any]:
        return {'shape': self.shape}
