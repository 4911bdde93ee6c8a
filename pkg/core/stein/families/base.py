"""
Аффинное семейство: закон c*X0 + s для базового закона X0 с замкнутыми формулами
"""

import math
from dataclasses import replace
from typing import Dict, Any, Tuple

import numpy as np

from ..interfaces import NoiseLaw
from ..types import LevyTriple, MeasurePart, MeasureSpec, DegenerateLawError, get_default_config
from ..measures import truncation_radius


_SUPPORT_CACHE: Dict[tuple, float] = {}


class AffineFamily(NoiseLaw):
    """
    Общая часть именованных семейств

    Подкласс задаёт базовый закон (scale=1, shift=0) через методы _base_*;
    масштаб и сдвиг обрабатываются здесь:
    H_c(y) = c²H(y/c) при c > 0 и c²(mass - H(y/c)) при c < 0,
    ψ_c(w) = s + c*ψ(c*w), m_c(y) = |c|*m(y/c).
    """

    symmetric: bool = False
    base_mean: float = 0.0

    def __post_init__(self):
        if self.scale == 0 or not math.isfinite(self.scale):
            raise DegenerateLawError(f"Недопустимый масштаб {self.scale} для {self.family}")
        if not math.isfinite(self.shift):
            raise DegenerateLawError("Сдвиг должен быть конечным")
        if self.symmetric and self.scale < 0:
            object.__setattr__(self, 'scale', -self.scale)

    # ---- базовый закон ----

    @property
    def base_variance(self) -> float:
        raise NotImplementedError

    def _base_jump_density(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _base_tail(self, r: float) -> float:
        """Масса меры скачков вне [-r, r]"""
        raise NotImplementedError

    def _base_jump_hinge(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _base_psi(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _base_cf(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _base_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def _base_pdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _base_jump_support(self) -> Tuple[float, float]:
        tol = get_default_config().tail_mass_tol
        key = (self.family, tuple(sorted(self._params().items())), tol)
        r = _SUPPORT_CACHE.get(key)
        if r is None:
            r = truncation_radius(self._base_tail, tol, start=math.sqrt(self.base_variance))
            _SUPPORT_CACHE[key] = r
        return (0.0, r) if self._positive_jumps else (-r, r)

    _positive_jumps: bool = False

    def _base_density_support(self) -> Tuple[float, float]:
        sd = math.sqrt(self.base_variance)
        return (-40.0 * sd, 40.0 * sd)

    def _base_breakpoints(self) -> Tuple[float, ...]:
        return ()

    def _params(self) -> Dict[str, Any]:
        return {}

    # ---- NoiseLaw ----

    @property
    def mean(self) -> float:
        return self.shift + self.scale * self.base_mean

    @property
    def variance(self) -> float:
        return self.scale * self.scale * self.base_variance

    @property
    def gaussian_var(self) -> float:
        return 0.0

    @property
    def jump_mass(self) -> float:
        return self.variance

    @property
    def jump_radius(self) -> float:
        lo, hi = self._base_jump_support()
        return abs(self.scale) * max(abs(lo), abs(hi))

    def levy_triple(self) -> LevyTriple:
        part = MeasurePart(
            density=self._base_jump_density,
            support=self._base_jump_support(),
            factor=self.scale,
            label=self.family,
        )
        return LevyTriple(drift_b=self.mean, gaussian_var=0.0,
                          jump_measure=MeasureSpec(parts=(part,)))

    def jump_hinge(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        c = self.scale
        base = self._base_jump_hinge(y / c)
        if c > 0:
            return c * c * base
        return c * c * (self.base_variance - base)

    def char_multiplier(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return self.shift + self.scale * self._base_psi(self.scale * w)

    def char_function(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return np.exp(1j * self.shift * w) * self._base_cf(self.scale * w)

    def sample_chunk(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.shift + self.scale * self._base_sample(rng, n)

    @property
    def has_density(self) -> bool:
        return True

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._base_pdf((x - self.shift) / self.scale) / abs(self.scale)

    def density_support(self) -> Tuple[float, float]:
        lo, hi = self._base_density_support()
        a, b = self.shift + self.scale * lo, self.shift + self.scale * hi
        return (min(a, b), max(a, b))

    def density_breakpoints(self) -> Tuple[float, ...]:
        return tuple(self.shift + self.scale * p for p in self._base_breakpoints())

    def scaled(self, c: float) -> NoiseLaw:
        if c == 0:
            raise DegenerateLawError("Масштаб 0 даёт вырожденный закон")
        return replace(self, scale=self.scale * c, shift=self.shift * c)

    def shifted(self, b: float) -> NoiseLaw:
        return replace(self, shift=self.shift + b)

    def to_dict(self) -> Dict[str, Any]:
        data = {'family': self.family}
        data.update(self._params())
        data['scale'] = self.scale
        data['shift'] = self.shift
        return data
