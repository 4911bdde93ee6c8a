"""
Произвольные безгранично делимые законы

LevyTripleNoise - закон, заданный тройкой (b, σ₀², M) напрямую;
GenericIDNoise - свёртка компонент с кратностями (результат convolve/scale/clt).
"""

import json
import math
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Any, Tuple, List, Iterable, Optional

import numpy as np
from scipy import special

from ..interfaces import NoiseLaw
from ..types import (
    LevyTriple, MeasurePart, MeasureSpec, PreconditionError, UnsupportedModelError,
    DegenerateLawError, ConfigError, SamplingError, get_default_config
)
from ..measures import (
    HingeTable, SplineHinge, JumpTable, cached_table, table_key, measure_mass, psi_integral,
    lk_exponent, truncation_radius, choose_jump_cutoff, small_jump_variance
)
from .normal import NormalNoise

logger = logging.getLogger(__name__)


# ==================== ПЛОТНОСТИ МЕР ====================

@dataclass(frozen=True)
class PowerExponentialDensity:
    """m(x) = coef * |x|^power * e^{-rate|x|} на стороне '+', '-' или 'both'"""
    coef: float
    power: float
    rate: float
    side: str = 'both'

    def __post_init__(self):
        if self.coef < 0 or self.rate <= 0 or self.power <= -1:
            raise PreconditionError("Нужно coef >= 0, rate > 0, power > -1")
        if self.side not in ('+', '-', 'both'):
            raise ConfigError(f"Неизвестная сторона меры: {self.side}")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide='ignore', invalid='ignore'):
            val = self.coef * np.where(ax > 0, ax ** self.power, 0.0 if self.power > 0 else 1.0) \
                * np.exp(-self.rate * ax)
        if self.side == '+':
            val = np.where(x > 0, val, 0.0)
        elif self.side == '-':
            val = np.where(x < 0, val, 0.0)
        return val

    def tail(self, r: float) -> float:
        """Масса вне [-r, r]"""
        p1 = self.power + 1.0
        one_side = self.coef * special.gamma(p1) * special.gammaincc(p1, self.rate * r) / self.rate ** p1
        return one_side * (2.0 if self.side == 'both' else 1.0)

    def support(self, tol: float) -> Tuple[float, float]:
        r = truncation_radius(self.tail, tol, start=(self.power + 1.0) / self.rate)
        if self.side == '+':
            return (0.0, r)
        if self.side == '-':
            return (-r, 0.0)
        return (-r, r)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': 'power_exponential', 'coef': self.coef, 'power': self.power,
                'rate': self.rate, 'side': self.side}


@dataclass(frozen=True)
class TabulatedDensity:
    """Плотность по таблице (x, values) с линейной интерполяцией, ноль вне таблицы"""
    x: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'x', tuple(float(v) for v in self.x))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if len(self.x) < 2 or len(self.x) != len(self.values):
            raise ConfigError("Таблица плотности: нужны x и values одинаковой длины >= 2")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ConfigError("Таблица плотности: x должны строго возрастать")
        if any(v < 0 or not math.isfinite(v) for v in self.values):
            raise PreconditionError("Плотность меры должна быть неотрицательной и конечной")

    def __call__(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.x, self.values, left=0.0, right=0.0)

    def support(self, tol: float) -> Tuple[float, float]:
        return (self.x[0], self.x[-1])

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': 'tabulated', 'x': list(self.x), 'values': list(self.values)}


def density_from_dict(data: Dict[str, Any]):
    kind = data.get('kind')
    fields = {k: v for k, v in data.items() if k != 'kind'}
    try:
        if kind == 'power_exponential':
            return PowerExponentialDensity(**fields)
        if kind == 'tabulated':
            return TabulatedDensity(**fields)
    except TypeError as e:
        raise ConfigError(f"Некорректные поля плотности {kind}: {str(e)}")
    raise UnsupportedModelError(f"Неизвестный вид плотности меры: {kind}")


def measure_to_dict(spec: MeasureSpec) -> Dict[str, Any]:
    parts = []
    for part in spec.parts:
        if hasattr(part.density, 'to_dict'):
            density = part.density.to_dict()
        else:
            density = {'kind': 'builtin', 'name': repr(part.density)}
        parts.append({'density': density, 'support': list(part.support),
                      'weight': part.weight, 'factor': part.factor})
    return {'parts': parts, 'atoms': [list(a) for a in spec.atoms]}


def measure_from_dict(data: Dict[str, Any]) -> MeasureSpec:
    unknown = set(data) - {'parts', 'atoms'}
    if unknown:
        raise ConfigError(f"Неизвестные поля меры: {sorted(unknown)}")
    tol = get_default_config().tail_mass_tol
    parts = []
    for item in data.get('parts', []):
        if 'density' in item:
            density = density_from_dict(item['density'])
            support = tuple(item.get('support') or density.support(tol))
            parts.append(MeasurePart(density=density, support=support,
                                     weight=float(item.get('weight', 1.0)),
                                     factor=float(item.get('factor', 1.0))))
        else:
            density = density_from_dict(item)
            parts.append(MeasurePart(density=density, support=density.support(tol)))
    atoms = tuple((float(a), float(w)) for a, w in data.get('atoms', []))
    return MeasureSpec(parts=tuple(parts), atoms=atoms)


# ==================== ТРОЙКА ЛЕВИ ====================

@dataclass(frozen=True)
class LevyTripleNoise(NoiseLaw):
    """
    Закон, заданный канонической тройкой

    Шарнир - таблица по квадратуре, ψ и f^ - составные квадратуры,
    моделирование - гауссова часть + малые скачки в гауссовой аппроксимации
    + сложный пуассоновский закон крупных скачков с компенсирующим сдвигом.
    """
    triple: LevyTriple = field(default_factory=LevyTriple)

    family = "generic_id"

    @property
    def mean(self) -> float:
        return self.triple.drift_b

    @cached_property
    def _jump_mass(self) -> float:
        mass = measure_mass(self.triple.jump_measure)
        if not math.isfinite(mass) or mass < 0:
            raise PreconditionError(f"Мера скачков не конечна: масса {mass}")
        return mass

    @property
    def variance(self) -> float:
        return self.triple.gaussian_var + self._jump_mass

    @property
    def gaussian_var(self) -> float:
        return self.triple.gaussian_var

    @property
    def jump_mass(self) -> float:
        return self._jump_mass

    @property
    def jump_radius(self) -> float:
        return self.triple.jump_measure.radius

    def levy_triple(self) -> LevyTriple:
        return self.triple

    def _table(self) -> HingeTable:
        key = table_key("triple:" + json.dumps(measure_to_dict(self.triple.jump_measure), sort_keys=True))
        sigma = math.sqrt(max(self._jump_mass, 1e-300))
        return cached_table(key, lambda: HingeTable(self.triple.jump_measure, sigma))

    def jump_hinge(self, y) -> np.ndarray:
        if self.triple.jump_measure.is_empty:
            return np.zeros_like(np.asarray(y, dtype=float))
        return self._table()(y)

    @property
    def hinge_exactness(self):
        if self.triple.jump_measure.is_empty:
            return ('closed_form', 0.0)
        return ('quadrature', self._table().tolerance)

    def char_multiplier(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return self.triple.drift_b - 1j * self.triple.gaussian_var * w \
            + psi_integral(self.triple.jump_measure, w)

    def char_function(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        exponent = 1j * self.triple.drift_b * w - 0.5 * self.triple.gaussian_var * w * w \
            + lk_exponent(self.triple.jump_measure, w)
        return np.exp(exponent)

    @cached_property
    def _sampler(self) -> Tuple[JumpTable, float, float]:
        spec = self.triple.jump_measure
        if spec.is_empty:
            return None, 0.0, 0.0
        try:
            eps = choose_jump_cutoff(spec, self.variance)
            folded = small_jump_variance(spec, eps)
            table = JumpTable(spec, eps)
        except SamplingError:
            raise
        except Exception as e:
            raise SamplingError(f"Мера скачков не нормируется для моделирования: {str(e)}")
        logger.info("Моделирование тройки: ε=%.3g, интенсивность %.3g, дисперсия малых скачков %.3g",
                    eps, table.rate, folded)
        return table, eps, folded

    @property
    def approximation_error(self) -> float:
        """Дисперсия малых скачков, заменённых гауссовой частью"""
        return self._sampler[2]

    def sample_chunk(self, rng: np.random.Generator, n: int) -> np.ndarray:
        table, _, folded = self._sampler
        sd = math.sqrt(self.triple.gaussian_var + folded)
        out = self.triple.drift_b + sd * rng.standard_normal(n)
        if table is not None and table.rate > 0:
            counts = rng.poisson(table.rate, n)
            jumps = table.sample(rng, int(counts.sum()))
            owner = np.repeat(np.arange(n), counts)
            out = out + np.bincount(owner, weights=jumps, minlength=n) - table.compensator
        return out

    def scaled(self, c: float) -> NoiseLaw:
        return LevyTripleNoise(self.triple.pushforward(c))

    def shifted(self, b: float) -> NoiseLaw:
        return LevyTripleNoise(self.triple.shifted(b))

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family, 'drift': self.triple.drift_b,
                'gaussian_var': self.triple.gaussian_var,
                'jump_measure': measure_to_dict(self.triple.jump_measure)}


# ==================== СВЁРТКА КОМПОНЕНТ ====================

def _round_floats(obj, digits: int = 12):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, digits) for v in obj]
    return obj


def _merge_key(law: NoiseLaw) -> str:
    return json.dumps(_round_floats(law.to_dict()), sort_keys=True)


@dataclass(frozen=True)
class GenericIDNoise(NoiseLaw):
    """
    Свёртка независимых компонент: X = Σ_i Σ_{j<k_i} X_ij + shift

    Ядро, ψ и моделирование - суммы по компонентам (аддитивность K по свёртке).
    Одинаковые компоненты сливаются в кратность, нормальные - в один нормальный.
    """
    components: Tuple[Tuple[int, NoiseLaw], ...] = ()
    shift: float = 0.0

    family = "generic_id"

    @classmethod
    def combine(cls, items: Iterable[Tuple[int, NoiseLaw]], shift: float = 0.0) -> NoiseLaw:
        """
        Собрать свёртку в простейшей форме

        Args:
            items: Пары (кратность, закон)
            shift: Дополнительный сдвиг

        Returns:
            NoiseLaw: Сам закон, если компонента одна; нормальный закон для
            чисто гауссовых свёрток; иначе GenericIDNoise
        """
        merged: Dict[str, List] = {}
        order: List[str] = []
        gauss_var, gauss_shift, has_gauss = 0.0, 0.0, False
        stack = [(int(k), law) for k, law in items]
        while stack:
            k, law = stack.pop(0)
            if k < 0:
                raise PreconditionError("Кратность компоненты должна быть >= 0")
            if k == 0:
                continue
            if not law.is_infinitely_divisible:
                raise UnsupportedModelError(
                    f"Свёртка с небезгранично делимым законом {law.family} не поддерживается")
            if isinstance(law, GenericIDNoise):
                shift += k * law.shift
                stack[0:0] = [(k * kk, inner) for kk, inner in law.components]
                continue
            if isinstance(law, NormalNoise):
                has_gauss = True
                gauss_var += k * law.variance
                gauss_shift += k * law.shift
                continue
            key = _merge_key(law)
            if key in merged:
                merged[key][0] += k
            else:
                merged[key] = [k, law]
                order.append(key)
        shift += gauss_shift
        comps = [(merged[key][0], merged[key][1]) for key in order]
        if not comps:
            return NormalNoise(gauss_var, shift)
        if has_gauss:
            comps.append((1, NormalNoise(gauss_var, 0.0)))
        if len(comps) == 1 and comps[0][0] == 1:
            law = comps[0][1]
            return law.shifted(shift) if shift != 0 else law
        return cls(components=tuple(comps), shift=shift)

    @property
    def mean(self) -> float:
        return self.shift + math.fsum(k * law.mean for k, law in self.components)

    @property
    def variance(self) -> float:
        return math.fsum(k * law.variance for k, law in self.components)

    @property
    def gaussian_var(self) -> float:
        return math.fsum(k * law.gaussian_var for k, law in self.components)

    @property
    def jump_radius(self) -> float:
        return max((law.jump_radius for _, law in self.components), default=0.0)

    def levy_triple(self) -> LevyTriple:
        triple = LevyTriple(drift_b=self.shift)
        for k, law in self.components:
            triple = triple.plus(law.levy_triple().times(k))
        return triple

    def _exact_jump_hinge(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros_like(y)
        for k, law in self.components:
            out = out + k * law.jump_hinge(y)
        return out

    def _uses_grid(self) -> bool:
        return len(self.components) > get_default_config().exact_component_limit

    def _grid(self) -> SplineHinge:
        config = get_default_config()
        sigma = math.sqrt(max(self.variance, 1e-300))
        half_width = max(config.hinge_grid_sigmas * sigma, self.jump_radius)
        mass = self.jump_mass

        def build():
            logger.info("Сплайн шарнира свёртки: %d компонент", len(self.components))
            return SplineHinge(self._exact_jump_hinge, mass, half_width,
                               config.hinge_grid_step * sigma)

        return cached_table(table_key("conv:" + self.model_id, config), build)

    def jump_hinge(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self._uses_grid():
            return self._grid()(y)
        return self._exact_jump_hinge(y)

    @property
    def hinge_exactness(self):
        kinds = [law.hinge_exactness for _, law in self.components]
        tol = math.fsum(k * t for (k, _), (_, t) in zip(self.components, kinds))
        if self._uses_grid():
            return ('quadrature', tol + self._grid().tolerance)
        if all(kind == 'closed_form' for kind, _ in kinds):
            return ('closed_form', 0.0)
        return ('quadrature', tol)

    def char_multiplier(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        out = np.full(w.shape, self.shift, dtype=complex)
        for k, law in self.components:
            out = out + k * law.char_multiplier(w)
        return out

    def char_function(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        out = np.exp(1j * self.shift * w)
        for k, law in self.components:
            out = out * law.char_function(w) ** k
        return out

    def sample_chunk(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.full(n, self.shift)
        for k, law in self.components:
            for _ in range(k):
                out = out + law.sample_chunk(rng, n)
        return out

    def scaled(self, c: float) -> NoiseLaw:
        if c == 0:
            raise DegenerateLawError("Масштаб 0 даёт вырожденный закон")
        return GenericIDNoise.combine([(k, law.scaled(c)) for k, law in self.components],
                                      shift=c * self.shift)

    def shifted(self, b: float) -> NoiseLaw:
        return GenericIDNoise.combine(self.components, shift=self.shift + b)

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family,
                'components': [{'multiplicity': k, 'model': law.to_dict()}
                               for k, law in self.components],
                'shift': self.shift}
