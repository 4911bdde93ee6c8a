"""
Обобщённый оператор Штейна K

K(g)(t) = b*g(t) + σ₀²*g'(t) + ∫ (g(t+x) - g(t))/x M(dx)

Три независимых пути вычисления:
- замкнутые шарнирные ядра h = K(g₀⁺) и линейность по блокам (apply_K)
- прямая адаптивная квадратура по мере скачков (levy_K)
- спектральный путь через БПФ и множитель ψ (spectral_K)
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union, Sequence

import numpy as np
from scipy import integrate

from .interfaces import NoiseLaw
from .types import (
    SteinConfig, TransformationReport, UnsupportedModelError, PreconditionError,
    QuadratureError, SpectralWrapError, get_default_config
)
from .measures import integrate_segments, inverse_tail, cached_table, table_key
from .estimators import (
    EstimatorExpr, IDENTITY, CONSTANT, HINGE_PLUS, HINGE_MINUS
)
from .families import JumpLaw
from .noise_models import (
    levy_view, convolve, scale, shift, clt_normalize, require_centered, _require_id
)

logger = logging.getLogger(__name__)

GFunction = Union[EstimatorExpr, Callable]


@dataclass(frozen=True)
class HingeKernel:
    """
    Шарнирное ядро h = K(g₀⁺) без слагаемого сдвига

    h(y) = σ₀²*1{y >= 0} + H(y), монотонно от 0 до σ².
    exactness: 'closed_form' или 'quadrature' с достигнутым допуском.
    """
    model: NoiseLaw
    exactness: str
    tolerance: float

    @property
    def variance(self) -> float:
        return self.model.variance

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        gauss = self.model.gaussian_var
        out = self.model.jump_hinge(y)
        if gauss > 0:
            out = out + gauss * (y >= 0)
        return out

    h = __call__


def _build_kernel(model: NoiseLaw) -> HingeKernel:
    kind, tol = model.hinge_exactness
    # таблицы строятся здесь, один раз на закон
    model.jump_hinge(np.zeros(1))
    logger.info("Шарнирное ядро %s (%s): %s, допуск %.3g",
                model.family, model.model_id, kind, tol)
    return HingeKernel(model=model, exactness=kind, tolerance=tol)


def _kernel_for(model: NoiseLaw) -> HingeKernel:
    _require_id(model, "Шарнирное ядро")
    return cached_table(table_key("kernel:" + model.model_id), lambda: _build_kernel(model))


def hinge_kernel(model: NoiseLaw) -> HingeKernel:
    """
    Шарнирное ядро центрированного закона

    Raises:
        UnsupportedModelError: Равномерный закон (см. модуль risk)
        PreconditionError: Ненулевое среднее
    """
    _require_id(model, "Шарнирное ядро")
    require_centered(model, "Шарнирное ядро")
    return _kernel_for(model)


def apply_K(model: NoiseLaw, expr: EstimatorExpr, x) -> np.ndarray:
    """
    K(expr)(x) по линейности через шарнирное ядро

    K(Identity) = b*x + σ², K(c) = b*c,
    K(HingePlus λ)(x) = b(x-λ)⁺ + h(x-λ),
    K(HingeMinus λ)(x) = b*min(x-λ, 0) + σ² - h(x-λ).

    Args:
        model: Безгранично делимый закон (среднее b учитывается)
        expr: Оценка или остаток
        x: Точки

    Returns:
        np.ndarray: Значения K(expr)(x)
    """
    kernel = _kernel_for(model)
    x = np.asarray(x, dtype=float)
    b = model.mean
    sigma2 = model.variance
    out = np.zeros_like(x)
    for coeff, block in expr.terms:
        if block.kind == IDENTITY:
            term = b * x + sigma2
        elif block.kind == CONSTANT:
            term = np.full_like(x, b * block.param)
        elif block.kind == HINGE_PLUS:
            y = x - block.param
            term = kernel(y)
            if b != 0:
                term = term + b * np.maximum(y, 0.0)
        else:
            y = x - block.param
            term = sigma2 - kernel(y)
            if b != 0:
                term = term + b * np.minimum(y, 0.0)
        out = out + coeff * term
    return out


# ==================== КВАДРАТУРА ПО МЕРЕ ====================

def _as_callable(g: GFunction, g_prime, knots):
    if isinstance(g, EstimatorExpr):
        fn = lambda s: float(g.evaluate(s))
        deriv = g_prime or (lambda s: float(g.derivative(s)))
        return fn, deriv, tuple(knots) if knots else g.knots()
    fn = lambda s: float(g(s))
    return fn, g_prime, tuple(knots or ())


def _fd_derivative(fn: Callable[[float], float], t: float, step: float) -> float:
    h = step * max(1.0, abs(t))
    return (fn(t + h) - fn(t - h)) / (2.0 * h)


def levy_K(model: NoiseLaw, g: GFunction, x, g_prime: Optional[Callable] = None,
           knots: Sequence[float] = (), full_output: bool = False,
           config: Optional[SteinConfig] = None):
    """
    K(g)(x) прямой адаптивной квадратурой

    Интеграл разностного отношения по каждой части меры скачков разбивается
    в точках 0 и knot - x; при |y| < fd_floor отношение заменяется производной.

    Args:
        model: Безгранично делимый закон
        g: Липшицева функция или EstimatorExpr
        x: Точка или массив точек
        g_prime: Производная g (иначе центральная разность)
        knots: Точки излома g
        full_output: Вернуть также оценку абсолютной погрешности

    Returns:
        float | np.ndarray, либо (значение, погрешность)

    Raises:
        QuadratureError: Квадратура не сошлась (с достигнутым допуском)
    """
    config = config or get_default_config()
    triple = levy_view(model)
    fn, deriv, knots = _as_callable(g, g_prime, knots)
    if deriv is None:
        deriv = lambda s: _fd_derivative(fn, s, config.fd_step)
    spec = triple.jump_measure

    def one(t: float) -> Tuple[float, float]:
        gt = fn(t)
        pieces = [triple.drift_b * gt]
        err = 0.0
        slope_t = None
        if triple.gaussian_var > 0 or spec.parts:
            slope_t = deriv(t)
        if triple.gaussian_var > 0:
            pieces.append(triple.gaussian_var * slope_t)
        for loc, mass in spec.atoms:
            pieces.append(mass * (fn(t + loc) - gt) / loc)
        for part in spec.parts:
            lo, hi = part.bounds

            def integrand(y, part=part):
                if abs(y) < config.fd_floor:
                    q = slope_t
                else:
                    q = (fn(t + y) - gt) / y
                return q * float(part.pdf(y))

            try:
                v, e = integrate_segments(integrand, lo, hi, (0.0, *[k - t for k in knots]), config)
            except QuadratureError as exc:
                raise QuadratureError(f"levy_K в x={t:.6g}: {str(exc)}",
                                      achieved_tolerance=exc.achieved_tolerance)
            pieces.append(v)
            err += e
        return math.fsum(pieces), err

    xs = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xs).ravel()
    results = [one(float(t)) for t in flat]
    values = np.array([r[0] for r in results]).reshape(xs.shape)
    errors = np.array([r[1] for r in results]).reshape(xs.shape)
    if xs.ndim == 0:
        values, errors = float(values), float(errors)
    if full_output:
        return values, errors
    return values


def compound_poisson_kernel(rate: float, jump: Union[JumpLaw, Callable], x) -> np.ndarray:
    """Свёрточное ядро сложного пуассоновского закона: k(x) = -rate*f(-x)*x"""
    pdf = jump.pdf if isinstance(jump, JumpLaw) else jump
    x = np.asarray(x, dtype=float)
    return -rate * pdf(-x) * x


def compound_poisson_K(rate: float, jump_density: Union[JumpLaw, Callable], g: GFunction, x,
                       support: Optional[Tuple[float, float]] = None,
                       knots: Sequence[float] = (),
                       config: Optional[SteinConfig] = None):
    """
    (k * g)(x) = rate * ∫ u f(u) g(x+u) du

    Совпадает с levy_K для CompoundPoissonNoise(rate, jump) (вместе со сдвигом rate*E J).

    Args:
        rate: Интенсивность
        jump_density: JumpLaw или плотность скачка
        g: Ограниченная функция
        x: Точка или массив
        support: Носитель плотности (по умолчанию - усечённый носитель JumpLaw или R)

    Raises:
        QuadratureError: Интеграл расходится или квадратура не сошлась
    """
    config = config or get_default_config()
    if rate <= 0:
        raise PreconditionError("Интенсивность должна быть > 0")
    if isinstance(jump_density, JumpLaw):
        pdf = jump_density.pdf
        support = support or jump_density.support(config.tail_mass_tol / rate)
    else:
        pdf = jump_density
    fn, _, knots = _as_callable(g, None, knots)
    lo, hi = support if support else (-math.inf, math.inf)

    def one(t: float) -> float:
        integrand = lambda u: u * float(pdf(np.asarray(u))) * fn(t + u)
        if math.isfinite(lo) and math.isfinite(hi):
            v, _ = integrate_segments(integrand, lo, hi, [k - t for k in knots], config)
        else:
            v, e = integrate.quad(integrand, lo, hi, epsabs=config.quad_tol, limit=config.quad_limit)
            if not math.isfinite(v) or e > config.quad_fail_tol:
                raise QuadratureError(f"Интеграл сложного пуассоновского ядра расходится в x={t:.6g}",
                                      achieved_tolerance=e)
        return rate * v

    xs = np.asarray(x, dtype=float)
    values = np.array([one(float(t)) for t in np.atleast_1d(xs).ravel()]).reshape(xs.shape)
    return float(values) if xs.ndim == 0 else values


# ==================== СПЕКТРАЛЬНЫЙ ПУТЬ ====================

def spectral_grid(model: NoiseLaw, g_radius: float, points: Optional[int] = None,
                  config: Optional[SteinConfig] = None) -> np.ndarray:
    """
    Равномерная сетка для spectral_K вокруг нуля

    Полуширина max(extent_factor*r_g, r_g + радиус меры скачков).
    """
    config = config or get_default_config()
    points = points or config.spectral_points
    radius = levy_view(model).jump_measure.radius
    half = max(config.spectral_extent_factor * g_radius, g_radius + radius)
    return np.linspace(-half, half, points, endpoint=False)


def spectral_K(model: NoiseLaw, g_values, grid, g_radius: Optional[float] = None,
               config: Optional[SteinConfig] = None) -> np.ndarray:
    """
    K(g) на сетке: обратное БПФ от g^(ω)*ψ(-ω)

    Args:
        model: Закон с доступным ψ
        g_values: Значения g на сетке (или функция)
        grid: Равномерная сетка
        g_radius: Радиус носителя g относительно центра сетки (иначе по ненулевым значениям)

    Raises:
        SpectralWrapError: Циклическое наложение выше spectral_wrap_tol
    """
    config = config or get_default_config()
    grid = np.asarray(grid, dtype=float)
    n = len(grid)
    if n < 4:
        raise PreconditionError("Сетка слишком мала")
    dx = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), dx, rtol=1e-9, atol=0.0):
        raise PreconditionError("Сетка spectral_K должна быть равномерной")
    values = g_values(grid) if callable(g_values) else np.asarray(g_values, dtype=float)
    values = np.asarray(values, dtype=float)
    if not np.any(values):
        return np.zeros(n)

    center = 0.5 * (grid[0] + grid[-1] + dx)
    if g_radius is None:
        nz = grid[np.abs(values) > 0]
        g_radius = float(np.max(np.abs(nz - center))) + dx
    length = n * dx
    gap = 0.5 * length - g_radius
    if gap <= 0:
        raise SpectralWrapError(f"Носитель g (радиус {g_radius:.4g}) не помещается в сетку длины {length:.4g}")
    spec = levy_view(model).jump_measure
    contamination = float(np.max(np.abs(values))) * inverse_tail(spec, gap, config)
    if contamination > config.spectral_wrap_tol:
        raise SpectralWrapError(
            f"Наложение {contamination:.3g} выше допуска {config.spectral_wrap_tol:.3g}; расширьте сетку",
        )

    omega = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
    multiplier = model.char_multiplier(-omega)
    return np.real(np.fft.ifft(np.fft.fft(values) * multiplier))


# ==================== ЦПТ И ПРАВИЛА ПРЕОБРАЗОВАНИЯ ====================

def clt_K(model: NoiseLaw, n: int, g: GFunction, x, g_prime: Optional[Callable] = None,
          knots: Sequence[float] = (), config: Optional[SteinConfig] = None):
    """
    K для закона (X₁+...+X_n)/√n

    При n -> ∞ стремится к σ²g'(x).
    """
    return levy_K(clt_normalize(model, n), g, x, g_prime=g_prime, knots=knots, config=config)


def check_transformation_rules(model_a: NoiseLaw, model_b: NoiseLaw, g: Callable, b: float, c: float,
                               grid, g_prime: Optional[Callable] = None, knots: Sequence[float] = (),
                               config: Optional[SteinConfig] = None) -> TransformationReport:
    """
    Численная проверка четырёх правил преобразования K

    1. K_f(g(·+b)) = K_f(g)(·+b)
    2. K_{X+b}(g) = K_f(g) + b*g
    3. K_{X₁+X₂}(g) = K_{X₁}(g) + K_{X₂}(g)
    4. K_{cX}(g)(y) = c*K_f(g(c·))(y/c)

    Returns:
        TransformationReport: Максимальные отклонения на сетке по каждому свойству
    """
    config = config or get_default_config()
    grid = np.asarray(grid, dtype=float)
    knots = tuple(knots)

    def K(model, fn, pts, fn_prime=None, fn_knots=knots):
        return np.atleast_1d(levy_K(model, fn, pts, g_prime=fn_prime, knots=fn_knots, config=config))

    g_fn = lambda s: float(g(s))
    base = K(model_a, g_fn, grid, g_prime)

    g_shift = lambda s: g_fn(s + b)
    gp_shift = (lambda s: g_prime(s + b)) if g_prime else None
    lhs1 = K(model_a, g_shift, grid, gp_shift, tuple(k - b for k in knots))
    rhs1 = K(model_a, g_fn, grid + b, g_prime)

    lhs2 = K(shift(model_a, b), g_fn, grid, g_prime)
    rhs2 = base + b * np.array([g_fn(t) for t in grid])

    lhs3 = K(convolve(model_a, model_b), g_fn, grid, g_prime)
    rhs3 = base + K(model_b, g_fn, grid, g_prime)

    g_scaled = lambda s: g_fn(c * s)
    gp_scaled = (lambda s: c * g_prime(c * s)) if g_prime else None
    lhs4 = K(scale(model_a, c), g_fn, grid, g_prime)
    rhs4 = c * K(model_a, g_scaled, grid / c, gp_scaled, tuple(k / c for k in knots))

    deviations = {
        'translation': float(np.max(np.abs(lhs1 - rhs1))),
        'shift': float(np.max(np.abs(lhs2 - rhs2))),
        'convolution': float(np.max(np.abs(lhs3 - rhs3))),
        'scaling': float(np.max(np.abs(lhs4 - rhs4))),
    }
    logger.debug("Правила преобразования K: %s", deviations)
    return TransformationReport(deviations=deviations, grid=list(map(float, grid)))
