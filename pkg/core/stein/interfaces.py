"""
Абстрактный интерфейс закона шума

Позволяет подключать различные законы:
- именованные семейства с замкнутыми формулами (нормальный, Лаплас, гамма, sech)
- сложные пуассоновские законы
- произвольные тройки Леви и свёртки законов
- небезгранично делимый равномерный шум (отдельный путь)
"""

import json
import hashlib
from abc import ABC, abstractmethod
from typing import Dict, Any, Tuple

import numpy as np

from .types import LevyTriple, UnsupportedModelError


class NoiseLaw(ABC):
    """
    Закон аддитивного шума X в модели наблюдения Y = θ + X

    Основные обязанности:
    1. Моменты и каноническая тройка Леви
    2. Шарнирная часть ядра H(y) = K(g₀⁺)(y) без гауссовой ступеньки
    3. Характеристическая функция и множитель ψ
    4. Генерация выборок и аффинные преобразования
    """

    family: str = ""

    @property
    @abstractmethod
    def mean(self) -> float:
        pass

    @property
    @abstractmethod
    def variance(self) -> float:
        pass

    @property
    def is_infinitely_divisible(self) -> bool:
        return True

    @abstractmethod
    def levy_triple(self) -> LevyTriple:
        """
        Каноническая тройка закона

        Raises:
            UnsupportedModelError: Для небезгранично делимых законов
        """
        pass

    @property
    def gaussian_var(self) -> float:
        return self.levy_triple().gaussian_var

    @property
    def jump_mass(self) -> float:
        """Полная масса меры скачков (= дисперсия минус гауссова часть)"""
        return self.variance - self.gaussian_var

    @property
    def jump_radius(self) -> float:
        """Радиус усечённого носителя меры скачков"""
        return self.levy_triple().jump_measure.radius

    @abstractmethod
    def jump_hinge(self, y) -> np.ndarray:
        """
        Скачковая часть шарнирного ядра

        H(y) = ∫ ((y+x)⁺ - y⁺)/x M(dx)

        Args:
            y: Точки (скаляр или массив)

        Returns:
            np.ndarray: Значения H, монотонно от 0 до массы меры скачков
        """
        pass

    @property
    def hinge_exactness(self) -> Tuple[str, float]:
        """('closed_form', 0) или ('quadrature', достигнутый допуск)"""
        return ('closed_form', 0.0)

    @abstractmethod
    def char_multiplier(self, w) -> np.ndarray:
        """ψ(w) = b - i*σ₀²*w + ∫(e^{-ixw} - 1)/x M(dx)"""
        pass

    @abstractmethod
    def char_function(self, w) -> np.ndarray:
        """Характеристическая функция E exp(iwX)"""
        pass

    @abstractmethod
    def sample_chunk(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n независимых реализаций из одного потока"""
        pass

    @abstractmethod
    def scaled(self, c: float) -> 'NoiseLaw':
        """Закон c*X"""
        pass

    @abstractmethod
    def shifted(self, b: float) -> 'NoiseLaw':
        """Закон X + b"""
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @property
    def has_density(self) -> bool:
        return False

    def pdf(self, x) -> np.ndarray:
        raise UnsupportedModelError(f"Плотность закона {self.family} недоступна")

    def density_support(self) -> Tuple[float, float]:
        """Интервал, вне которого плотность пренебрежимо мала"""
        sd = np.sqrt(self.variance)
        return (self.mean - 40 * sd, self.mean + 40 * sd)

    def density_breakpoints(self) -> Tuple[float, ...]:
        """Точки негладкости плотности"""
        return ()

    @property
    def model_id(self) -> str:
        """Короткий SHA-256 канонического JSON закона"""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_dict()})"
