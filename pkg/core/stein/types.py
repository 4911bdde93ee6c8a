"""
Типы данных подсистемы оценки риска Штейна
"""

import os
import math
from dataclasses import dataclass, field, asdict, replace
from typing import Optional, List, Dict, Any, Tuple, Callable
from datetime import datetime

import numpy as np


# ==================== МЕРЫ СКАЧКОВ ====================

@dataclass(frozen=True)
class MeasurePart:
    """
    Плотностная часть меры скачков M(dx) = m(x) dx

    Хранит базовую плотность m0 на носителе support; образ меры при
    x -> factor*x получается без пересчёта плотности:
    m(y) = weight * |factor| * m0(y / factor).
    """
    density: Callable[[np.ndarray], np.ndarray]
    support: Tuple[float, float]
    weight: float = 1.0
    factor: float = 1.0
    label: str = ""

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise PreconditionError(f"Пустой носитель меры: {self.support}")
        if self.weight < 0:
            raise PreconditionError("Вес меры не может быть отрицательным")
        if self.factor == 0:
            raise DegenerateLawError("Нулевой множитель образа меры")

    @property
    def bounds(self) -> Tuple[float, float]:
        """Носитель после образа x -> factor*x"""
        lo, hi = self.support
        a, b = self.factor * lo, self.factor * hi
        return (min(a, b), max(a, b))

    def pdf(self, x) -> np.ndarray:
        """Плотность меры в точках x (ноль вне носителя)"""
        x = np.asarray(x, dtype=float)
        u = x / self.factor
        lo, hi = self.support
        inside = (u >= lo) & (u <= hi)
        out = np.zeros_like(u)
        if np.any(inside):
            out[inside] = self.weight * abs(self.factor) * self.density(u[inside])
        return out

    def pushforward(self, c: float) -> 'MeasurePart':
        """Образ при x -> c*x в каноническом параметре (масса умножается на c²)"""
        return replace(self, factor=self.factor * c)

    def times(self, k: float) -> 'MeasurePart':
        return replace(self, weight=self.weight * k)


@dataclass(frozen=True)
class MeasureSpec:
    """Конечная мера на R\\{0}: плотностные части плюс атомы (точка, масса)"""
    parts: Tuple[MeasurePart, ...] = ()
    atoms: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        for loc, mass in self.atoms:
            if loc == 0:
                # Гауссова часть хранится в LevyTriple.gaussian_var
                raise PreconditionError("Атом в нуле запрещён")
            if not (mass > 0 and math.isfinite(mass)):
                raise PreconditionError(f"Некорректная масса атома: {mass}")

    @property
    def is_empty(self) -> bool:
        return not self.parts and not self.atoms

    @property
    def radius(self) -> float:
        """Радиус (усечённого) носителя"""
        r = 0.0
        for part in self.parts:
            lo, hi = part.bounds
            r = max(r, abs(lo), abs(hi))
        for loc, _ in self.atoms:
            r = max(r, abs(loc))
        return r

    def atom_mass(self) -> float:
        return math.fsum(mass for _, mass in self.atoms)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for part in self.parts:
            out = out + part.pdf(x)
        return out

    def pushforward(self, c: float) -> 'MeasureSpec':
        if c == 0:
            raise DegenerateLawError("Масштаб 0 даёт вырожденный закон")
        return MeasureSpec(
            parts=tuple(p.pushforward(c) for p in self.parts),
            atoms=tuple((c * loc, c * c * mass) for loc, mass in self.atoms),
        )

    def plus(self, other: 'MeasureSpec') -> 'MeasureSpec':
        return MeasureSpec(parts=self.parts + other.parts, atoms=self.atoms + other.atoms)

    def times(self, k: float) -> 'MeasureSpec':
        if k < 0:
            raise PreconditionError("Кратность меры должна быть неотрицательной")
        if k == 0:
            return MeasureSpec()
        return MeasureSpec(
            parts=tuple(p.times(k) for p in self.parts),
            atoms=tuple((loc, k * mass) for loc, mass in self.atoms),
        )


@dataclass(frozen=True)
class LevyTriple:
    """
    Каноническая тройка безгранично делимого закона

    log f^(t) = i*b*t - gaussian_var*t²/2 + ∫(e^{ixt} - 1 - ixt)/x² M(dx)

    Args:
        drift_b: Сдвиг (совпадает со средним закона)
        gaussian_var: Гауссов атом M({0})
        jump_measure: Конечная мера скачков на R\\{0}
    """
    drift_b: float = 0.0
    gaussian_var: float = 0.0
    jump_measure: MeasureSpec = field(default_factory=MeasureSpec)

    def __post_init__(self):
        if not math.isfinite(self.drift_b):
            raise PreconditionError("Сдвиг должен быть конечным")
        if not (self.gaussian_var >= 0 and math.isfinite(self.gaussian_var)):
            raise PreconditionError(f"Гауссова дисперсия должна быть >= 0: {self.gaussian_var}")

    def shifted(self, b: float) -> 'LevyTriple':
        return replace(self, drift_b=self.drift_b + b)

    def pushforward(self, c: float) -> 'LevyTriple':
        """Тройка закона c*X"""
        if c == 0:
            raise DegenerateLawError("Масштаб 0 даёт вырожденный закон")
        return LevyTriple(
            drift_b=c * self.drift_b,
            gaussian_var=c * c * self.gaussian_var,
            jump_measure=self.jump_measure.pushforward(c),
        )

    def plus(self, other: 'LevyTriple') -> 'LevyTriple':
        """Тройка свёртки: сдвиги, гауссовы атомы и меры складываются"""
        return LevyTriple(
            drift_b=self.drift_b + other.drift_b,
            gaussian_var=self.gaussian_var + other.gaussian_var,
            jump_measure=self.jump_measure.plus(other.jump_measure),
        )

    def times(self, k: int) -> 'LevyTriple':
        return LevyTriple(
            drift_b=k * self.drift_b,
            gaussian_var=k * self.gaussian_var,
            jump_measure=self.jump_measure.times(k),
        )


# ==================== РЕЗУЛЬТАТЫ ====================

@dataclass(frozen=True)
class RiskEstimate:
    """Несмещённая оценка риска в одной точке наблюдения"""
    value: float
    variance_term: float
    g_squared: float
    cross_term: float
    x: float
    model_id: str = ""
    estimator_id: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': self.x,
            'risk': self.value,
            'variance_term': self.variance_term,
            'g_squared': self.g_squared,
            'cross_term': self.cross_term,
            'model_id': self.model_id,
            'estimator_id': self.estimator_id,
        }


@dataclass(frozen=True)
class RiskCurve:
    """Векторизованная кривая оценок риска по сетке x"""
    x: np.ndarray
    risk: np.ndarray
    variance_term: np.ndarray
    g_squared: np.ndarray
    cross_term: np.ndarray
    model_id: str = ""
    estimator_id: str = ""

    COLUMNS = ('x', 'risk', 'variance_term', 'g_squared', 'cross_term')

    def rows(self):
        """Строки в порядке колонок CSV"""
        return zip(self.x, self.risk, self.variance_term, self.g_squared, self.cross_term)

    def __getitem__(self, i: int) -> RiskEstimate:
        return RiskEstimate(
            value=float(self.risk[i]),
            variance_term=float(self.variance_term[i]),
            g_squared=float(self.g_squared[i]),
            cross_term=float(self.cross_term[i]),
            x=float(self.x[i]),
            model_id=self.model_id,
            estimator_id=self.estimator_id,
        )

    def __len__(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class ExpectedRisk:
    """Точный (квадратура) или Монте-Карло риск E(d(X+θ)-θ)²"""
    value: float
    standard_error: float = 0.0
    method: str = "quadrature"  # 'quadrature' | 'monte_carlo'

    def __float__(self) -> float:
        return self.value


@dataclass
class SampleBatch:
    """Выборка шума с метаданными воспроизводимости"""
    model_id: str
    seed: int
    values: np.ndarray
    count: int
    approximation_error: float = 0.0  # дисперсия малых скачков, заменённых гауссовой частью

    def __post_init__(self):
        if self.count != len(self.values):
            raise SamplingError("Размер выборки не совпадает с count")


@dataclass(frozen=True)
class SteinCheck:
    """Результат Монте-Карло проверки тождества Штейна"""
    lhs: float
    rhs: float
    se: float
    n: int
    theta: float
    model_id: str = ""

    @property
    def z_score(self) -> float:
        if self.se == 0:
            return 0.0 if self.lhs == self.rhs else math.inf
        return abs(self.lhs - self.rhs) / self.se

    def passed(self, k: float = 4.0) -> bool:
        return abs(self.lhs - self.rhs) <= k * self.se + 1e-12

    def __iter__(self):
        # распаковка lhs, rhs, se = check
        return iter((self.lhs, self.rhs, self.se))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lhs': self.lhs, 'rhs': self.rhs, 'se': self.se,
            'n': self.n, 'theta': self.theta, 'model_id': self.model_id,
        }


@dataclass
class TransformationReport:
    """Отклонения по четырём свойствам оператора K"""
    deviations: Dict[str, float] = field(default_factory=dict)
    grid: List[float] = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values()) if self.deviations else 0.0

    def passed(self, tol: float = 1e-6) -> bool:
        return self.max_deviation < tol

    def to_dict(self) -> Dict[str, Any]:
        return {'deviations': dict(self.deviations), 'max_deviation': self.max_deviation}


@dataclass
class LevelCoeffs:
    """Коэффициенты одной полосы вейвлет-разложения"""
    level: int
    coeffs: np.ndarray
    n_total: int
    band: str = "detail"  # 'detail' | 'approx'
    noise: Optional[Any] = None  # NoiseLaw после распространения шума

    @property
    def label(self) -> str:
        return f"{self.band}{self.level}"


@dataclass
class Decomposition:
    """Вейвлет-разложение: полоса аппроксимации и детали от грубых к мелким"""
    approx: LevelCoeffs
    details: List[LevelCoeffs]
    wavelet: str
    n_total: int

    @property
    def bands(self) -> List[LevelCoeffs]:
        """Все полосы в порядке грубая -> мелкая"""
        return [self.approx] + list(self.details)

    @property
    def levels(self) -> int:
        return len(self.details)

    def energy(self) -> float:
        return math.fsum(float(np.dot(b.coeffs, b.coeffs)) for b in self.bands)


@dataclass(frozen=True)
class ThresholdChoice:
    """Выбранный порог одной полосы"""
    level: int
    lambda_: float
    risk: Optional[float]
    n_candidates: int
    noise_variance: float
    band: str = "detail"
    noise_id: Optional[str] = None  # model_id закона шума полосы

    def to_dict(self) -> Dict[str, Any]:
        return {
            'level': self.level,
            'lambda': self.lambda_,
            'risk': self.risk,
            'n_candidates': self.n_candidates,
            'noise_variance': self.noise_variance,
            'noise_id': self.noise_id,
            'band': self.band,
        }


# ==================== КОНФИГУРАЦИЯ ====================

@dataclass
class SteinConfig:
    """Численная конфигурация"""
    # Квадратуры
    quad_tol: float = 1e-10
    quad_fail_tol: float = 1e-7        # выше этой погрешности квадратура считается несошедшейся
    quad_limit: int = 200
    tail_mass_tol: float = 1e-10
    measure_panels: int = 4096         # панели Гаусса-Лежандра для интегралов по мере
    fd_floor: float = 1e-8             # ниже |y| разностное отношение заменяется производной
    fd_step: float = 1e-6

    # Таблицы шарнирного ядра
    hinge_grid_sigmas: float = 12.0
    hinge_grid_step: float = 1e-3      # в единицах σ
    exact_component_limit: int = 8

    # Спектральный путь
    spectral_points: int = 2 ** 14
    spectral_extent_factor: float = 8.0
    spectral_wrap_tol: float = 1e-5

    # Гладкие оценки
    smooth_nodes: int = 256

    # Монте-Карло
    mc_chunk: int = 65536
    mc_samples: int = 200000
    mc_seed: int = 20240611
    cp_rate_cap: float = 64.0
    small_jump_fraction: float = 1e-6
    workers: int = 1

    # SureShrink
    sure_subsample: int = 256
    refine_intervals: int = 512
    sure_chunk: int = 1 << 20

    # Вывод
    output_digits: int = 17

    def __post_init__(self):
        """Валидация конфигурации"""
        for name in ('quad_tol', 'quad_fail_tol', 'tail_mass_tol', 'fd_floor', 'fd_step',
                     'hinge_grid_sigmas', 'hinge_grid_step', 'spectral_extent_factor',
                     'spectral_wrap_tol', 'cp_rate_cap', 'small_jump_fraction'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigError(f"Параметр {name} должен быть положительным: {value}")
        n = int(self.spectral_points)
        if n < 64 or n & (n - 1):
            raise ConfigError(f"spectral_points должен быть степенью двойки >= 64: {n}")
        if self.smooth_nodes < 2:
            self.smooth_nodes = 2
        if self.smooth_nodes % 2:
            self.smooth_nodes += 1
        if self.mc_chunk < 1024:
            self.mc_chunk = 1024
        if self.workers < 1:
            self.workers = 1
        if self.measure_panels < 64:
            self.measure_panels = 64
        if self.exact_component_limit < 1:
            self.exact_component_limit = 1
        if self.refine_intervals < 1:
            self.refine_intervals = 1
        if not 1 <= self.output_digits <= 17:
            raise ConfigError("output_digits вне диапазона 1..17")

    def with_overrides(self, **overrides) -> 'SteinConfig':
        """Копия с изменёнными полями; неизвестные поля запрещены"""
        unknown = set(overrides) - set(self.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Неизвестные параметры конфигурации: {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SteinConfig':
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Неизвестные параметры конфигурации: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_yaml(cls, yaml_path: str) -> 'SteinConfig':
        """Загрузка конфигурации из YAML (секция stein)"""
        import yaml
        with open(yaml_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
        return cls.from_dict(data.get('stein', {}))

    def to_yaml(self, yaml_path: str):
        """Сохранение конфигурации в YAML"""
        import yaml
        data = {'stein': self.to_dict()}
        with open(yaml_path, 'w', encoding='utf-8') as f:
            yaml.dump(data, f, default_flow_style=False, allow_unicode=True)

    @classmethod
    def from_env(cls, base: Optional['SteinConfig'] = None) -> 'SteinConfig':
        """
        Конфигурация с учётом переменных окружения

        Note:
            SUREID_QUAD_TOL переопределяет допуск квадратур.
            Файл .env подхватывается через python-dotenv.
        """
        from dotenv import load_dotenv
        load_dotenv()
        config = base or cls()
        raw = os.getenv('SUREID_QUAD_TOL')
        if raw:
            try:
                tol = float(raw)
            except ValueError:
                raise ConfigError(f"SUREID_QUAD_TOL не число: {raw!r}")
            config = config.with_overrides(quad_tol=tol)
        return config


_default_config: Optional[SteinConfig] = None


def get_default_config() -> SteinConfig:
    """Процессная конфигурация по умолчанию (с учётом окружения)"""
    global _default_config
    if _default_config is None:
        _default_config = SteinConfig.from_env()
    return _default_config


def set_default_config(config: Optional[SteinConfig]):
    global _default_config
    _default_config = config


# ==================== ИСКЛЮЧЕНИЯ ====================

class SteinError(Exception):
    """Базовое исключение подсистемы"""
    pass

class UnsupportedModelError(SteinError):
    """Операция не поддерживается для данного закона шума"""
    pass

class PreconditionError(SteinError):
    """Нарушено предусловие операции"""
    pass

class DegenerateLawError(SteinError):
    """Вырожденный закон (например, масштаб 0)"""
    pass

class QuadratureError(SteinError):
    """Квадратура не сошлась"""

    def __init__(self, message: str, achieved_tolerance: float = math.inf):
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance

class SamplingError(SteinError):
    """Ошибка генерации выборки"""
    pass

class WaveletError(SteinError):
    """Ошибка вейвлет-преобразования"""
    pass

class ThresholdSelectionError(SteinError):
    """Ошибка выбора порога"""
    pass

class ConfigError(SteinError):
    """Некорректная конфигурация"""
    pass

class SpectralWrapError(SteinError):
    """Циклическое наложение в спектральном пути выше допуска"""
    pass
