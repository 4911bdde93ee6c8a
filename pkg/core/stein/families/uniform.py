"""
Равномерный шум на [-a, a]: не безгранично делим, отдельный путь риска
"""

import math
from dataclasses import dataclass
from typing import Dict, Any, Tuple

import numpy as np

from ..interfaces import NoiseLaw
from ..types import LevyTriple, UnsupportedModelError, DegenerateLawError


def uniform_h(x) -> np.ndarray:
    """
    Шарнир для U[-1, 1]: 2-периодическое продолжение -x(x-2)/2 с [0, 2] на R⁺, 0 на R⁻

    Представитель не единственен; выбран этот канонический.
    """
    x = np.asarray(x, dtype=float)
    u = np.mod(x, 2.0)
    return np.where(x <= 0, 0.0, -u * (u - 2.0) / 2.0)


def uniform_r(theta) -> np.ndarray:
    """r(θ) = (1/2)∫₋₁¹ x(x+θ)⁺ dx"""
    t = np.asarray(theta, dtype=float)
    inner = 1.0 / 6.0 + t / 4.0 - t ** 3 / 12.0
    return np.where(t <= -1.0, 0.0, np.where(t >= 1.0, 1.0 / 3.0, inner))


@dataclass(frozen=True)
class UniformNoise(NoiseLaw):
    """
    Равномерный закон с полушириной halfwidth

    Шарнир масштабируется как h_a(y) = a²*uniform_h(y/a); дисперсия a²/3.
    """
    halfwidth: float = 1.0
    shift: float = 0.0

    family = "uniform"

    def __post_init__(self):
        if not (self.halfwidth > 0 and math.isfinite(self.halfwidth)):
            raise DegenerateLawError(f"Полуширина должна быть > 0: {self.halfwidth}")

    @property
    def mean(self) -> float:
        return self.shift

    @property
    def variance(self) -> float:
        return self.halfwidth ** 2 / 3.0

    @property
    def is_infinitely_divisible(self) -> bool:
        return False

    @property
    def gaussian_var(self) -> float:
        return 0.0

    def levy_triple(self) -> LevyTriple:
        raise UnsupportedModelError(
            "Равномерный закон не безгранично делим: тройки Леви нет, "
            "риск считается через специальный шарнир uniform_h"
        )

    def jump_hinge(self, y) -> np.ndarray:
        raise UnsupportedModelError("Для равномерного закона используйте hinge()")

    def hinge(self, y) -> np.ndarray:
        a = self.halfwidth
        return a * a * uniform_h(np.asarray(y, dtype=float) / a)

    def char_multiplier(self, w) -> np.ndarray:
        raise UnsupportedModelError("Преобразование Фурье равномерного закона имеет нули: ψ не определён")

    def char_function(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return np.exp(1j * self.shift * w) * np.sinc(self.halfwidth * w / math.pi)

    def sample_chunk(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.shift + rng.uniform(-self.halfwidth, self.halfwidth, n)

    @property
    def has_density(self) -> bool:
        return True

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float) - self.shift
        return np.where(np.abs(x) <= self.halfwidth, 0.5 / self.halfwidth, 0.0)

    def density_support(self) -> Tuple[float, float]:
        return (self.shift - self.halfwidth, self.shift + self.halfwidth)

    def scaled(self, c: float) -> NoiseLaw:
        if c == 0:
            raise DegenerateLawError("Масштаб 0 даёт вырожденный закон")
        return UniformNoise(abs(c) * self.halfwidth, c * self.shift)

    def shifted(self, b: float) -> NoiseLaw:
        return UniformNoise(self.halfwidth, self.shift + b)

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family, 'halfwidth': self.halfwidth, 'shift': self.shift}
