"""
Несмещённые оценки риска

r^(x) = σ² + g(x)² + 2K(g)(x) для d = id + g; E r^(X+θ) = E(d(X+θ) - θ)².
Равномерный шум не безгранично делим и идёт отдельным путём через uniform_h.
"""

import math
import logging
from typing import Callable, Optional, Sequence, Union, List

import numpy as np

from .interfaces import NoiseLaw
from .types import (
    RiskEstimate, RiskCurve, ExpectedRisk, SteinConfig, UnsupportedModelError,
    PreconditionError, get_default_config
)
from .measures import integrate_segments
from .estimators import (
    EstimatorExpr, residual, soft_expr, IDENTITY, CONSTANT, HINGE_PLUS
)
from .families import UniformNoise, uniform_h, uniform_r
from .kernel import apply_K
from .noise_models import require_centered

logger = logging.getLogger(__name__)

ExprBuilder = Callable[[int, np.ndarray], EstimatorExpr]


def uniform_apply_K(model: UniformNoise, expr: EstimatorExpr, x) -> np.ndarray:
    """
    K для центрированного равномерного шума через h и дополнение σ² - h

    Шарнир h_a(y) = a²*uniform_h(y/a) - канонический представитель
    (оценки для равномерного шума не единственны).
    """
    require_centered(model, "Ядро равномерного шума")
    x = np.asarray(x, dtype=float)
    sigma2 = model.variance
    out = np.zeros_like(x)
    for coeff, block in expr.terms:
        if block.kind == IDENTITY:
            term = np.full_like(x, sigma2)
        elif block.kind == CONSTANT:
            term = np.zeros_like(x)
        elif block.kind == HINGE_PLUS:
            term = model.hinge(x - block.param)
        else:
            term = sigma2 - model.hinge(x - block.param)
        out = out + coeff * term
    return out


def apply_stein(model: NoiseLaw, expr: EstimatorExpr, x) -> np.ndarray:
    """K(expr)(x) для любого поддерживаемого закона"""
    if isinstance(model, UniformNoise):
        return uniform_apply_K(model, expr, x)
    return apply_K(model, expr, x)


def risk_curve(model: NoiseLaw, expr: EstimatorExpr, xs) -> RiskCurve:
    """
    Векторизованная оценка риска на сетке

    Args:
        model: Центрированный закон
        expr: Оценка d (не остаток)
        xs: Точки наблюдения

    Returns:
        RiskCurve: risk = variance_term + g_squared + cross_term
    """
    require_centered(model, "Оценка риска")
    xs = np.asarray(xs, dtype=float)
    g = residual(expr)
    g_values = g.evaluate(xs)
    variance = np.full_like(xs, model.variance)
    g_squared = g_values * g_values
    cross = 2.0 * apply_stein(model, g, xs)
    return RiskCurve(
        x=xs,
        risk=variance + g_squared + cross,
        variance_term=variance,
        g_squared=g_squared,
        cross_term=cross,
        model_id=model.model_id,
        estimator_id=expr.estimator_id,
    )


def unbiased_risk(model: NoiseLaw, expr: EstimatorExpr, x: float) -> RiskEstimate:
    """
    Несмещённая оценка риска в одной точке

    Для мягкого порога: σ² + min(x², λ²) + 2(h(x-λ) - h(x+λ)).
    """
    return risk_curve(model, expr, np.array([float(x)]))[0]


def unbiased_risk_uniform_soft(halfwidth: float, lam: float, x) -> Union[RiskEstimate, RiskCurve]:
    """
    Оценка риска мягкого порога при шуме U[-a, a]

    Шарнир масштабируется с полуширины 1: h_a(y) = a²*uniform_h(y/a).
    """
    if not halfwidth > 0:
        raise PreconditionError("Полуширина должна быть > 0")
    model = UniformNoise(halfwidth)
    xs = np.asarray(x, dtype=float)
    curve = risk_curve(model, soft_expr(lam), np.atleast_1d(xs))
    return curve[0] if xs.ndim == 0 else curve


# ==================== ОЖИДАЕМЫЙ РИСК ====================

def expectation(model: NoiseLaw, fn: Callable, breakpoints: Sequence[float] = (),
                config: Optional[SteinConfig] = None) -> float:
    """
    ∫ fn(x) f(x) dx адаптивной квадратурой по носителю плотности

    Raises:
        UnsupportedModelError: Нет поточечной плотности
        QuadratureError: Квадратура не сошлась
    """
    config = config or get_default_config()
    if not model.has_density:
        raise UnsupportedModelError(f"У закона {model.family} нет поточечной плотности")
    lo, hi = model.density_support()
    points = list(breakpoints) + list(model.density_breakpoints())
    integrand = lambda s: float(np.asarray(fn(s), dtype=float)) * float(model.pdf(s))
    value, _ = integrate_segments(integrand, lo, hi, points, config)
    return value


def expected_risk(model: NoiseLaw, expr: EstimatorExpr, theta: float,
                  n_mc: Optional[int] = None, seed: Optional[int] = None,
                  config: Optional[SteinConfig] = None) -> ExpectedRisk:
    """
    E(d(X+θ) - θ)²: квадратура по плотности, иначе Монте-Карло

    Returns:
        ExpectedRisk: method = 'quadrature' или 'monte_carlo' (со стандартной ошибкой)
    """
    config = config or get_default_config()
    if model.has_density:
        loss = lambda s: (expr.evaluate(s + theta) - theta) ** 2
        knots = [k - theta for k in expr.knots()]
        return ExpectedRisk(expectation(model, loss, knots, config), 0.0, 'quadrature')
    from .mc_oracle import mc_risk
    logger.info("Закон %s без плотности: ожидаемый риск методом Монте-Карло", model.family)
    return mc_risk(model, expr, theta, n_mc or config.mc_samples,
                   config.mc_seed if seed is None else seed, config=config)


def mean_unbiased_risk(model: NoiseLaw, expr: EstimatorExpr, theta: float,
                       config: Optional[SteinConfig] = None) -> float:
    """E r^(X+θ) квадратурой (левая часть тождества несмещённости)"""
    knots = [k - theta for k in expr.knots()]
    fn = lambda s: risk_curve(model, expr, np.array([s + theta])).risk[0]
    return expectation(model, fn, knots, config)


def multivariate_risk(models: Sequence[NoiseLaw],
                      exprs: Union[Sequence[EstimatorExpr], ExprBuilder],
                      x_vec) -> float:
    """
    Оценка риска для независимых координат, K применяется покоординатно

    Σ_i [σ_i² + g_i(x)² + 2K_i(g_i(·, x_{-i}))(x_i)]

    Args:
        models: Законы координат
        exprs: Список оценок по координатам или builder(i, x) -> оценка d_i
            как функция x_i при фиксированных остальных координатах
        x_vec: Наблюдение
    """
    x_vec = np.asarray(x_vec, dtype=float)
    if len(models) != len(x_vec):
        raise PreconditionError("Число законов не совпадает с размерностью наблюдения")
    pieces: List[float] = []
    for i, model in enumerate(models):
        expr = exprs(i, x_vec) if callable(exprs) else exprs[i]
        pieces.append(float(risk_curve(model, expr, x_vec[i:i + 1]).risk[0]))
    return math.fsum(pieces)


__all__ = [
    'uniform_h', 'uniform_r', 'uniform_apply_K', 'apply_stein', 'risk_curve',
    'unbiased_risk', 'unbiased_risk_uniform_soft', 'expectation', 'expected_risk',
    'mean_unbiased_risk', 'multivariate_risk',
]
