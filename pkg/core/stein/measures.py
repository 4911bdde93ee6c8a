"""
Квадратуры по мерам скачков

Масса меры, характеристический множитель ψ, экспонента Леви-Хинчина,
таблицы шарнирного ядра и усечение бесконечных носителей.
"""

import math
import logging
import threading
import warnings
from functools import lru_cache
from typing import Callable, Optional, Tuple, List

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import CubicSpline

from .types import (
    MeasurePart, MeasureSpec, SteinConfig, QuadratureError, get_default_config
)

logger = logging.getLogger(__name__)

_GL_ORDER = 8


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Узлы и веса Гаусса-Лежандра на [-1, 1]"""
    nodes, weights = special.roots_legendre(order)
    return nodes, weights


def composite_nodes(lo: float, hi: float, panels: int,
                    order: int = _GL_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """
    Составная квадратура Гаусса-Лежандра на [lo, hi]

    Returns:
        (x, w): Узлы и веса, плоские массивы длины panels*order
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    t, wt = gauss_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = mid[:, None] + half[:, None] * t[None, :]
    w = half[:, None] * wt[None, :]
    return x.ravel(), w.ravel()


def part_nodes(part: MeasurePart, config: Optional[SteinConfig] = None):
    """Узлы по носителю части меры с разбиением в нуле; веса уже умножены на плотность"""
    config = config or get_default_config()
    lo, hi = part.bounds
    pieces = [(lo, hi)]
    if lo < 0 < hi:
        pieces = [(lo, 0.0), (0.0, hi)]
    total = hi - lo
    xs, ws = [], []
    for a, b in pieces:
        panels = max(16, int(round(config.measure_panels * (b - a) / total)))
        x, w = composite_nodes(a, b, panels)
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws) * part.pdf(x)
    return x, w


def _quad(fn: Callable[[float], float], a: float, b: float,
          config: SteinConfig, points=None) -> Tuple[float, float]:
    """Адаптивная квадратура с проверкой достигнутой точности"""
    if b <= a:
        return 0.0, 0.0
    if points is not None:
        points = [p for p in points if a < p < b]
        if not points:
            points = None
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', integrate.IntegrationWarning)
        value, err = integrate.quad(fn, a, b, epsabs=config.quad_tol, epsrel=1e-12,
                                    limit=config.quad_limit, points=points)
    if not math.isfinite(value) or err > config.quad_fail_tol:
        raise QuadratureError(
            f"Квадратура на [{a:.6g}, {b:.6g}] не сошлась: погрешность {err:.3g}",
            achieved_tolerance=err,
        )
    return value, err


def integrate_segments(fn: Callable[[float], float], lo: float, hi: float,
                       breakpoints=(), config: Optional[SteinConfig] = None) -> Tuple[float, float]:
    """
    ∫ fn на [lo, hi], разбитый по точкам негладкости

    Returns:
        (значение, оценка погрешности)
    """
    config = config or get_default_config()
    cuts = sorted({lo, hi, *[p for p in breakpoints if lo < p < hi]})
    total, err = 0.0, 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        v, e = _quad(fn, a, b, config)
        total += v
        err += e
    return total, err


def measure_mass(spec: MeasureSpec, config: Optional[SteinConfig] = None) -> float:
    """Полная масса меры (квадратура плюс атомы)"""
    config = config or get_default_config()
    pieces = [spec.atom_mass()]
    for part in spec.parts:
        lo, hi = part.bounds
        v, _ = integrate_segments(lambda x: float(part.pdf(x)), lo, hi, (0.0,), config)
        pieces.append(v)
    return math.fsum(pieces)


def abs_moment(spec: MeasureSpec, config: Optional[SteinConfig] = None) -> float:
    """∫ |x| M(dx): характеристика удалённости массы от нуля"""
    config = config or get_default_config()
    pieces = [abs(loc) * mass for loc, mass in spec.atoms]
    for part in spec.parts:
        lo, hi = part.bounds
        v, _ = integrate_segments(lambda x: abs(x) * float(part.pdf(x)), lo, hi, (0.0,), config)
        pieces.append(v)
    return math.fsum(pieces)


def inverse_tail(spec: MeasureSpec, gap: float, config: Optional[SteinConfig] = None) -> float:
    """∫_{|x|>gap} M(dx)/|x|"""
    config = config or get_default_config()
    pieces = [mass / abs(loc) for loc, mass in spec.atoms if abs(loc) > gap]
    for part in spec.parts:
        lo, hi = part.bounds
        f = lambda x: float(part.pdf(x)) / abs(x)
        if hi > gap:
            pieces.append(integrate_segments(f, max(lo, gap), hi, (), config)[0])
        if lo < -gap:
            pieces.append(integrate_segments(f, lo, min(hi, -gap), (), config)[0])
    return math.fsum(pieces)


def truncation_radius(tail: Callable[[float], float], tol: float, start: float = 1.0) -> float:
    """
    Наименьший радиус R, для которого хвостовая масса tail(R) не превышает tol

    Args:
        tail: Монотонно убывающая хвостовая масса
        tol: Допуск хвостовой массы
        start: Начальная оценка масштаба
    """
    if tail(0.0) <= tol:
        return max(start, 1e-12)
    hi = max(start, 1e-6)
    while tail(hi) > tol:
        hi *= 2.0
        if hi > 1e12:
            raise QuadratureError("Не удалось усечь носитель меры", achieved_tolerance=tail(hi))
    return optimize.brentq(lambda r: tail(r) - tol, 0.0, hi, xtol=1e-12 * hi)


# ==================== ФУРЬЕ ====================

def _as_w(w) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(w, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def psi_integral(spec: MeasureSpec, w, config: Optional[SteinConfig] = None) -> np.ndarray:
    """∫ (e^{-ixw} - 1)/x M(dx), вектор по w"""
    config = config or get_default_config()
    ws, scalar = _as_w(w)
    out = np.zeros(ws.shape, dtype=complex)
    for loc, mass in spec.atoms:
        out += mass * _psi_kernel(np.full(1, loc), ws)[:, 0]
    for part in spec.parts:
        x, wt = part_nodes(part, config)
        for sl in _chunks(len(ws), max(1, 2 ** 20 // max(len(x), 1))):
            out[sl] += _psi_kernel(x, ws[sl]) @ wt
    return out[0] if scalar else out


def lk_exponent(spec: MeasureSpec, w, config: Optional[SteinConfig] = None) -> np.ndarray:
    """∫ (e^{ixw} - 1 - ixw)/x² M(dx), вектор по w"""
    config = config or get_default_config()
    ws, scalar = _as_w(w)
    out = np.zeros(ws.shape, dtype=complex)
    for loc, mass in spec.atoms:
        out += mass * _lk_kernel(np.full(1, loc), ws)[:, 0]
    for part in spec.parts:
        x, wt = part_nodes(part, config)
        for sl in _chunks(len(ws), max(1, 2 ** 20 // max(len(x), 1))):
            out[sl] += _lk_kernel(x, ws[sl]) @ wt
    return out[0] if scalar else out


def _chunks(n: int, size: int):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def _psi_kernel(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # (e^{-ixw} - 1)/x без сокращения при малых xw
    u = w[:, None] * x[None, :]
    s = np.sin(0.5 * u)
    return (-2.0 * s * s - 1j * np.sin(u)) / x[None, :]


def _lk_kernel(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    u = w[:, None] * x[None, :]
    s = np.sin(0.5 * u)
    real = -2.0 * s * s
    small = np.abs(u) < 1e-3
    imag = np.where(small, -u ** 3 / 6.0 + u ** 5 / 120.0, np.sin(u) - u)
    return (real + 1j * imag) / (x[None, :] ** 2)


# ==================== ШАРНИРНОЕ ЯДРО ====================

def atom_hinge(atoms, y: np.ndarray) -> np.ndarray:
    """Вклад атомов: w*((y+a)⁺ - y⁺)/a"""
    out = np.zeros_like(y)
    yp = np.maximum(y, 0.0)
    for loc, mass in atoms:
        out += mass * (np.maximum(y + loc, 0.0) - yp) / loc
    return out


def hinge_direct(spec: MeasureSpec, y: float, config: Optional[SteinConfig] = None) -> float:
    """H(y) прямой адаптивной квадратурой (эталон для таблиц)"""
    config = config or get_default_config()
    yp = max(y, 0.0)
    pieces = [float(atom_hinge(spec.atoms, np.array([y]))[0])]
    for part in spec.parts:
        lo, hi = part.bounds

        def integrand(x, part=part):
            return (max(y + x, 0.0) - yp) / x * float(part.pdf(x)) if x != 0 else float(part.pdf(x)) * (y >= 0)

        pieces.append(integrate_segments(integrand, lo, hi, (0.0, -y), config)[0])
    return math.fsum(pieces)


class HingeTable:
    """
    Табулированная скачковая часть шарнирного ядра

    Кумулятивные массы A±(z) = ∫_{±x>z} m и B±(z) = ∫_{±x>z} m/|x| считаются
    составной квадратурой по ячейкам сетки z_k = k*δ; затем
    H(z) = mass - A⁻(z) + z*B⁻(z), H(-z) = A⁺(z) - z*B⁺(z).
    Каждая полуось интерполируется своим кубическим сплайном (излом в нуле).
    """

    def __init__(self, spec: MeasureSpec, sigma: float,
                 config: Optional[SteinConfig] = None):
        config = config or get_default_config()
        self.atoms = spec.atoms
        sigma = max(sigma, 1e-12)
        radius = spec.radius
        half_width = max(config.hinge_grid_sigmas * sigma, min(radius, 400.0 * sigma))
        step = config.hinge_grid_step * sigma
        n_cells = int(math.ceil(half_width / step))
        if n_cells > 2 ** 18:
            n_cells = 2 ** 18
            step = half_width / n_cells
        self.half_width = n_cells * step
        self.step = step
        z = np.arange(n_cells + 1) * step

        a_pos = np.zeros(n_cells + 1)
        a_neg = np.zeros(n_cells + 1)
        b_pos = np.zeros(n_cells + 1)
        b_neg = np.zeros(n_cells + 1)
        for part in spec.parts:
            for sign, a_acc, b_acc in ((1.0, a_pos, b_pos), (-1.0, a_neg, b_neg)):
                cm, cb, tm, tb = self._side_cells(part, z, sign, config)
                a_acc[:-1] += np.cumsum(cm[::-1])[::-1]
                b_acc[:-1] += np.cumsum(cb[::-1])[::-1]
                a_acc += tm
                b_acc += tb
        self.density_mass = a_pos[0] + a_neg[0]
        self.mass = self.density_mass + spec.atom_mass()
        right = self.density_mass - a_neg + z * b_neg
        left = a_pos - z * b_pos
        self._right = CubicSpline(z, right)
        self._left = CubicSpline(-z[::-1], left[::-1])
        self.tolerance = self._measure_tolerance(spec, config)
        logger.debug("Таблица шарнира: %d ячеек, шаг %.3g, допуск %.3g",
                     n_cells, step, self.tolerance)

    @staticmethod
    def _side_cells(part: MeasurePart, z: np.ndarray, sign: float, config: SteinConfig):
        lo, hi = part.bounds
        if sign > 0:
            a = np.clip(z[:-1], lo, hi)
            b = np.clip(z[1:], lo, hi)
        else:
            a = np.clip(-z[1:], lo, hi)
            b = np.clip(-z[:-1], lo, hi)
        t, wt = gauss_legendre(6)
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        x = mid[:, None] + half[:, None] * t[None, :]
        with np.errstate(divide='ignore', invalid='ignore'):
            m = part.pdf(x.ravel()).reshape(x.shape)
            w = half[:, None] * wt[None, :]
            cm = np.sum(w * m, axis=1)
            cb = np.sum(w * np.where(x != 0, m / np.abs(x), 0.0), axis=1)
        edge = z[-1]
        tm = tb = 0.0
        f_m = lambda s: float(part.pdf(s))
        f_b = lambda s: float(part.pdf(s)) / abs(s)
        if sign > 0 and hi > edge:
            tm = integrate_segments(f_m, max(lo, edge), hi, (), config)[0]
            tb = integrate_segments(f_b, max(lo, edge), hi, (), config)[0]
        if sign < 0 and lo < -edge:
            tm = integrate_segments(f_m, lo, min(hi, -edge), (), config)[0]
            tb = integrate_segments(f_b, lo, min(hi, -edge), (), config)[0]
        return cm, cb, tm, tb

    def _measure_tolerance(self, spec: MeasureSpec, config: SteinConfig) -> float:
        checkpoints = np.linspace(-self.half_width, self.half_width, 41)[1:-1] + 0.5 * self.step
        dens = MeasureSpec(parts=spec.parts)
        err = 0.0
        for y in checkpoints:
            try:
                exact = hinge_direct(dens, float(y), config)
            except QuadratureError as e:
                logger.warning("Эталон шарнира не сошёлся в %.4g: %s", y, e)
                continue
            err = max(err, abs(exact - float(self._density_part(np.array([y]))[0])))
        return err

    def _density_part(self, y: np.ndarray) -> np.ndarray:
        out = np.empty_like(y)
        pos = y >= 0
        out[pos] = np.where(y[pos] > self.half_width, self.density_mass, self._right(np.minimum(y[pos], self.half_width)))
        neg = ~pos
        out[neg] = np.where(y[neg] < -self.half_width, 0.0, self._left(np.maximum(y[neg], -self.half_width)))
        return out

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        out = self._density_part(flat) + atom_hinge(self.atoms, flat)
        return out.reshape(y.shape) if y.ndim else out[0]


class SplineHinge:
    """Сплайн-мемоизация уже вычислимой функции H на равномерной сетке"""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], mass: float,
                 half_width: float, step: float):
        n_cells = int(math.ceil(half_width / step))
        if n_cells > 2 ** 18:
            n_cells = 2 ** 18
            step = half_width / n_cells
        self.half_width = n_cells * step
        self.mass = mass
        z = np.arange(n_cells + 1) * step
        self._right = CubicSpline(z, fn(z))
        neg = -z[::-1]
        self._left = CubicSpline(neg, fn(neg))
        mids = np.linspace(-self.half_width, self.half_width, 257)[1:-1] + 0.5 * step
        self.tolerance = float(np.max(np.abs(fn(mids) - self(mids))))

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        out = np.empty_like(flat)
        pos = flat >= 0
        out[pos] = np.where(flat[pos] > self.half_width, self.mass,
                            self._right(np.minimum(flat[pos], self.half_width)))
        out[~pos] = np.where(flat[~pos] < -self.half_width, 0.0,
                             self._left(np.maximum(flat[~pos], -self.half_width)))
        return out.reshape(y.shape) if y.ndim else out[0]


_table_cache = {}
_key_locks = {}
_table_lock = threading.Lock()


def table_key(prefix: str, config: Optional[SteinConfig] = None) -> str:
    """Ключ кэша с параметрами квадратуры и сетки, от которых зависит таблица"""
    config = config or get_default_config()
    return (f"{prefix}|{config.quad_tol!r}:{config.tail_mass_tol!r}:{config.measure_panels}:"
            f"{config.hinge_grid_sigmas!r}:{config.hinge_grid_step!r}:{config.exact_component_limit}")


def cached_table(key: str, factory: Callable[[], object]):
    """
    Потокобезопасный кэш таблиц (строится один раз на ключ)

    Фабрика выполняется под блокировкой своего ключа, а не общей:
    построение ядра само обращается к кэшу за таблицами закона.
    """
    with _table_lock:
        table = _table_cache.get(key)
        if table is not None:
            return table
        key_lock = _key_locks.setdefault(key, threading.RLock())
    with key_lock:
        with _table_lock:
            table = _table_cache.get(key)
        if table is None:
            table = factory()
            with _table_lock:
                _table_cache[key] = table
        return table


def clear_table_cache():
    with _table_lock:
        _table_cache.clear()
        _key_locks.clear()


# ==================== СКАЧКИ ДЛЯ МОДЕЛИРОВАНИЯ ====================

class JumpTable:
    """
    Обратная функция распределения крупных скачков |x| >= ε

    Мера Леви ν = M/x² на |x| >= ε нормируется до вероятностного закона;
    интенсивность rate = ν(|x| >= ε), компенсатор ∫ x ν(dx).
    """

    def __init__(self, spec: MeasureSpec, eps: float, config: Optional[SteinConfig] = None):
        config = config or get_default_config()
        self.eps = eps
        xs, cdf_pieces = [], []
        for part in spec.parts:
            lo, hi = part.bounds
            for a, b in ((max(lo, eps), hi), (lo, min(hi, -eps))):
                if b <= a:
                    continue
                x, w = composite_nodes(a, b, max(64, config.measure_panels // 2), 4)
                nu = w * part.pdf(x) / (x * x)
                xs.append(x)
                cdf_pieces.append(nu)
        atom_locs = [loc for loc, _ in spec.atoms if abs(loc) >= eps]
        atom_rates = [mass / (loc * loc) for loc, mass in spec.atoms if abs(loc) >= eps]
        xs.append(np.asarray(atom_locs, dtype=float))
        cdf_pieces.append(np.asarray(atom_rates, dtype=float))
        x = np.concatenate(xs)
        nu = np.concatenate(cdf_pieces)
        order = np.argsort(x, kind='stable')
        self.points = x[order]
        weights = nu[order]
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            from .types import SamplingError
            raise SamplingError("Мера скачков не нормируется: отрицательная или бесконечная плотность")
        self.rate = float(math.fsum(weights))
        self.compensator = float(math.fsum(weights * self.points))
        self._cdf = np.cumsum(weights) / self.rate if self.rate > 0 else np.zeros(0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if size == 0 or self.rate == 0:
            return np.zeros(size)
        u = rng.random(size)
        idx = np.searchsorted(self._cdf, u, side='left')
        return self.points[np.minimum(idx, len(self.points) - 1)]


def small_jump_variance(spec: MeasureSpec, eps: float, config: Optional[SteinConfig] = None) -> float:
    """M((-ε, ε)): дисперсия малых скачков"""
    config = config or get_default_config()
    pieces = [mass for loc, mass in spec.atoms if abs(loc) < eps]
    for part in spec.parts:
        lo, hi = part.bounds
        a, b = max(lo, -eps), min(hi, eps)
        if b > a:
            pieces.append(integrate_segments(lambda x: float(part.pdf(x)), a, b, (0.0,), config)[0])
    return math.fsum(pieces)


def large_jump_rate(spec: MeasureSpec, eps: float, config: Optional[SteinConfig] = None) -> float:
    """ν(|x| >= ε) = ∫_{|x|>=ε} M(dx)/x²"""
    config = config or get_default_config()
    pieces = [mass / (loc * loc) for loc, mass in spec.atoms if abs(loc) >= eps]
    for part in spec.parts:
        lo, hi = part.bounds
        f = lambda x: float(part.pdf(x)) / (x * x)
        if hi > eps:
            pieces.append(integrate_segments(f, max(lo, eps), hi, (), config)[0])
        if lo < -eps:
            pieces.append(integrate_segments(f, lo, min(hi, -eps), (), config)[0])
    return math.fsum(pieces)


def choose_jump_cutoff(spec: MeasureSpec, variance: float,
                       config: Optional[SteinConfig] = None) -> float:
    """
    Порог ε для моделирования: малые скачки заменяются гауссовой частью

    ε = max(ε_var, ε_rate), где M((-ε_var, ε_var)) = fraction*σ²
    и ν(|x| >= ε_rate) = rate_cap.
    """
    config = config or get_default_config()
    radius = spec.radius
    if radius == 0:
        return 0.0
    target = config.small_jump_fraction * variance
    tiny = radius * 1e-12
    if small_jump_variance(spec, radius, config) <= target:
        return radius
    eps = optimize.brentq(lambda e: small_jump_variance(spec, e, config) - target,
                          tiny, radius, xtol=1e-10 * radius)
    # интенсивность убывает по ε, поэтому ищем только правее ε_var
    if large_jump_rate(spec, eps, config) > config.cp_rate_cap:
        eps = optimize.brentq(lambda e: large_jump_rate(spec, e, config) - config.cp_rate_cap,
                              eps, radius, xtol=1e-10 * radius)
    return eps
