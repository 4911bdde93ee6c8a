"""
Нормальный шум: чистый гауссов атом тройки Леви
"""

import math
from dataclasses import dataclass
from typing import Dict, Any, Tuple

import numpy as np
from scipy import stats

from ..interfaces import NoiseLaw
from ..types import LevyTriple, PreconditionError, DegenerateLawError


@dataclass(frozen=True)
class NormalNoise(NoiseLaw):
    """
    Нормальный закон N(shift, variance)

    Ядро K(g) = variance*g' (плюс shift*g), шарнир h(y) = variance*1{y >= 0}.
    Нулевая дисперсия допускается как вырожденный предел (точечная масса).
    """
    variance: float = 1.0
    shift: float = 0.0

    family = "normal"

    def __post_init__(self):
        if not (self.variance >= 0 and math.isfinite(self.variance)):
            raise PreconditionError(f"Дисперсия нормального закона должна быть >= 0: {self.variance}")
        if not math.isfinite(self.shift):
            raise PreconditionError("Сдвиг должен быть конечным")

    @property
    def mean(self) -> float:
        return self.shift

    @property
    def gaussian_var(self) -> float:
        return self.variance

    @property
    def jump_mass(self) -> float:
        return 0.0

    @property
    def jump_radius(self) -> float:
        return 0.0

    def levy_triple(self) -> LevyTriple:
        return LevyTriple(drift_b=self.shift, gaussian_var=self.variance)

    def jump_hinge(self, y) -> np.ndarray:
        return np.zeros_like(np.asarray(y, dtype=float))

    def char_multiplier(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return self.shift - 1j * self.variance * w

    def char_function(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return np.exp(1j * self.shift * w - 0.5 * self.variance * w * w)

    def sample_chunk(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.shift + math.sqrt(self.variance) * rng.standard_normal(n)

    @property
    def has_density(self) -> bool:
        return self.variance > 0

    def pdf(self, x) -> np.ndarray:
        if self.variance == 0:
            raise DegenerateLawError("У вырожденного нормального закона нет плотности")
        return stats.norm.pdf(np.asarray(x, dtype=float), loc=self.shift,
                              scale=math.sqrt(self.variance))

    def density_support(self) -> Tuple[float, float]:
        sd = math.sqrt(self.variance)
        return (self.shift - 40 * sd, self.shift + 40 * sd)

    def scaled(self, c: float) -> NoiseLaw:
        if c == 0:
            raise DegenerateLawError("Масштаб 0 даёт вырожденный закон")
        return NormalNoise(c * c * self.variance, c * self.shift)

    def shifted(self, b: float) -> NoiseLaw:
        return NormalNoise(self.variance, self.shift + b)

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family, 'variance': self.variance, 'shift': self.shift}
