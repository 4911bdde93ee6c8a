"""
Сложный пуассоновский шум: сумма Poisson(rate) независимых скачков J
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Any, Tuple

import numpy as np
from scipy import stats

from ..interfaces import NoiseLaw
from ..types import (
    LevyTriple, MeasurePart, MeasureSpec, PreconditionError, DegenerateLawError,
    UnsupportedModelError, ConfigError, get_default_config
)
from ..measures import HingeTable, cached_table, table_key, truncation_radius

_JUMP_PARAMS = {
    'normal': ('mean', 'sd'),
    'uniform': ('low', 'high'),
    'exponential': ('rate',),
    'laplace': ('scale',),
}


@dataclass(frozen=True)
class JumpLaw:
    """
    Закон скачка J = factor * J0

    Базовые законы J0 - замороженные распределения scipy.stats:
    normal(mean, sd), uniform(low, high), exponential(rate), laplace(scale).
    """
    kind: str
    params: Tuple[float, ...]
    factor: float = 1.0

    def __post_init__(self):
        names = _JUMP_PARAMS.get(self.kind)
        if names is None:
            raise UnsupportedModelError(f"Неизвестный закон скачка: {self.kind}")
        if len(self.params) != len(names):
            raise ConfigError(f"Закон {self.kind} ожидает параметры {names}")
        object.__setattr__(self, 'params', tuple(float(p) for p in self.params))
        if self.factor == 0:
            raise DegenerateLawError("Нулевой множитель скачка")
        if self.kind == 'normal' and self.params[1] <= 0:
            raise PreconditionError("sd скачка должно быть > 0")
        if self.kind == 'uniform' and not self.params[0] < self.params[1]:
            raise PreconditionError("Нужно low < high")
        if self.kind in ('exponential', 'laplace') and self.params[0] <= 0:
            raise PreconditionError(f"Параметр закона {self.kind} должен быть > 0")

    @classmethod
    def normal(cls, mean: float = 0.0, sd: float = 1.0) -> 'JumpLaw':
        return cls('normal', (mean, sd))

    @classmethod
    def uniform(cls, low: float, high: float) -> 'JumpLaw':
        return cls('uniform', (low, high))

    @classmethod
    def exponential(cls, rate: float = 1.0) -> 'JumpLaw':
        return cls('exponential', (rate,))

    @classmethod
    def laplace(cls, scale: float = 1.0) -> 'JumpLaw':
        return cls('laplace', (scale,))

    @property
    def dist(self):
        p = self.params
        if self.kind == 'normal':
            return stats.norm(loc=p[0], scale=p[1])
        if self.kind == 'uniform':
            return stats.uniform(loc=p[0], scale=p[1] - p[0])
        if self.kind == 'exponential':
            return stats.expon(scale=1.0 / p[0])
        return stats.laplace(scale=p[0])

    @property
    def mean(self) -> float:
        return self.factor * float(self.dist.mean())

    @property
    def second_moment(self) -> float:
        d = self.dist
        return self.factor ** 2 * float(d.var() + d.mean() ** 2)

    def pdf(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.dist.pdf(u / self.factor) / abs(self.factor)

    def _base_support(self, tol: float) -> Tuple[float, float]:
        p = self.params
        if self.kind == 'uniform':
            return (p[0], p[1])
        if self.kind == 'normal':
            # хвост второго момента за 12 sd пренебрежим
            reach = 12.0 * p[1]
            return (p[0] - reach, p[0] + reach)
        if self.kind == 'exponential':
            r = p[0]
            tail = lambda x: math.exp(-r * x) * (x * x + 2 * x / r + 2 / r ** 2)
            return (0.0, truncation_radius(tail, tol, start=1.0 / r))
        s = p[0]
        tail = lambda x: math.exp(-x / s) * (x * x + 2 * x * s + 2 * s * s)
        r = truncation_radius(tail, tol, start=s)
        return (-r, r)

    def support(self, tol: float) -> Tuple[float, float]:
        """Усечённый носитель J (хвост второго момента меньше tol)"""
        lo, hi = self._base_support(tol)
        a, b = self.factor * lo, self.factor * hi
        return (min(a, b), max(a, b))

    def cf(self, w) -> np.ndarray:
        """E e^{iwJ}"""
        t = self.factor * np.asarray(w, dtype=float)
        p = self.params
        if self.kind == 'normal':
            return np.exp(1j * p[0] * t - 0.5 * (p[1] * t) ** 2)
        if self.kind == 'exponential':
            return p[0] / (p[0] - 1j * t)
        if self.kind == 'laplace':
            return (1.0 / (1.0 + (p[0] * t) ** 2)).astype(complex)
        lo, hi = p
        with np.errstate(divide='ignore', invalid='ignore'):
            val = (np.exp(1j * t * hi) - np.exp(1j * t * lo)) / (1j * t * (hi - lo))
        return np.where(t == 0, 1.0 + 0j, val)

    def weighted_cf(self, w) -> np.ndarray:
        """E[J e^{-iwJ}] в замкнутой форме"""
        t = self.factor * np.asarray(w, dtype=float)
        p = self.params
        if self.kind == 'normal':
            mu, sd = p
            base = (mu - 1j * sd * sd * t) * np.exp(-1j * mu * t - 0.5 * (sd * t) ** 2)
        elif self.kind == 'exponential':
            r = p[0]
            base = r / (r + 1j * t) ** 2
        elif self.kind == 'laplace':
            s = p[0]
            base = -2j * s * s * t / (1.0 + (s * t) ** 2) ** 2
        else:
            base = self._uniform_weighted_cf(t)
        return self.factor * base

    def _uniform_weighted_cf(self, t: np.ndarray) -> np.ndarray:
        lo, hi = self.params
        width = hi - lo
        moments = [(hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * width) for k in range(1, 5)]
        series = moments[0] - 1j * t * moments[1] - 0.5 * t ** 2 * moments[2] + 1j * t ** 3 / 6.0 * moments[3]
        small = np.abs(t) * max(abs(lo), abs(hi)) < 1e-3
        safe = np.where(small, 1.0, t)

        def anti(u):
            return np.exp(-1j * safe * u) * (1j * u / safe + 1.0 / safe ** 2)

        exact = (anti(hi) - anti(lo)) / width
        return np.where(small, series, exact)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.factor * self.dist.rvs(size=n, random_state=rng)

    def scaled(self, c: float) -> 'JumpLaw':
        return JumpLaw(self.kind, self.params, self.factor * c)

    def to_dict(self) -> Dict[str, Any]:
        data = {'kind': self.kind}
        data.update(zip(_JUMP_PARAMS[self.kind], self.params))
        if self.factor != 1.0:
            data['factor'] = self.factor
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'JumpLaw':
        kind = data.get('kind')
        names = _JUMP_PARAMS.get(kind)
        if names is None:
            raise UnsupportedModelError(f"Неизвестный закон скачка: {kind}")
        unknown = set(data) - {'kind', 'factor', *names}
        if unknown:
            raise ConfigError(f"Неизвестные поля закона скачка: {sorted(unknown)}")
        try:
            params = tuple(float(data[name]) for name in names)
        except KeyError as e:
            raise ConfigError(f"Не задан параметр скачка: {str(e)}")
        return cls(kind, params, float(data.get('factor', 1.0)))


@dataclass(frozen=True)
class CompoundJumpDensity:
    """Плотность канонической меры M(dx) = rate * x² * f_J(x) dx"""
    rate: float
    jump: JumpLaw

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.rate * x * x * self.jump.pdf(x)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': 'compound_poisson', 'rate': self.rate, 'jump': self.jump.to_dict()}


@dataclass(frozen=True)
class CompoundPoissonNoise(NoiseLaw):
    """
    Сложный пуассоновский закон S = Σ_{i<N} J_i + shift, N ~ Poisson(rate)

    b = rate*E J + shift, M(dx) = rate*x²*f_J(x) dx,
    ψ(w) = shift + rate*E[J e^{-iwJ}], f^(w) = exp(i*shift*w + rate*(φ_J(w) - 1)).
    """
    rate: float
    jump: JumpLaw = field(default_factory=JumpLaw.normal)
    shift: float = 0.0

    family = "compound_poisson"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise PreconditionError(f"Интенсивность должна быть > 0: {self.rate}")

    @property
    def mean(self) -> float:
        return self.rate * self.jump.mean + self.shift

    @property
    def variance(self) -> float:
        return self.rate * self.jump.second_moment

    @property
    def gaussian_var(self) -> float:
        return 0.0

    @property
    def jump_mass(self) -> float:
        return self.variance

    def jump_support(self) -> Tuple[float, float]:
        return self.jump.support(get_default_config().tail_mass_tol / self.rate)

    @property
    def jump_radius(self) -> float:
        lo, hi = self.jump_support()
        return max(abs(lo), abs(hi))

    def jump_spec(self) -> MeasureSpec:
        part = MeasurePart(density=CompoundJumpDensity(self.rate, self.jump),
                           support=self.jump_support(), label=self.family)
        return MeasureSpec(parts=(part,))

    def levy_triple(self) -> LevyTriple:
        return LevyTriple(drift_b=self.mean, gaussian_var=0.0, jump_measure=self.jump_spec())

    def _table(self) -> HingeTable:
        key = table_key(f"cp:{self.rate!r}:{self.jump!r}")
        return cached_table(key, lambda: HingeTable(self.jump_spec(), math.sqrt(self.variance)))

    def jump_hinge(self, y) -> np.ndarray:
        return self._table()(y)

    @property
    def hinge_exactness(self):
        return ('quadrature', self._table().tolerance)

    def char_multiplier(self, w) -> np.ndarray:
        return self.shift + self.rate * self.jump.weighted_cf(w)

    def char_function(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return np.exp(1j * self.shift * w + self.rate * (self.jump.cf(w) - 1.0))

    def sample_chunk(self, rng: np.random.Generator, n: int) -> np.ndarray:
        counts = rng.poisson(self.rate, n)
        jumps = self.jump.sample(rng, int(counts.sum()))
        owner = np.repeat(np.arange(n), counts)
        return np.bincount(owner, weights=jumps, minlength=n) + self.shift

    def scaled(self, c: float) -> NoiseLaw:
        if c == 0:
            raise DegenerateLawError("Масштаб 0 даёт вырожденный закон")
        return CompoundPoissonNoise(self.rate, self.jump.scaled(c), c * self.shift)

    def shifted(self, b: float) -> NoiseLaw:
        return CompoundPoissonNoise(self.rate, self.jump, self.shift + b)

    def centered(self) -> 'CompoundPoissonNoise':
        """Тот же закон со сдвигом -rate*E J (среднее 0)"""
        return CompoundPoissonNoise(self.rate, self.jump, -self.rate * self.jump.mean)

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family, 'rate': self.rate,
                'jump': self.jump.to_dict(), 'shift': self.shift}
