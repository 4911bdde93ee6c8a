"""
Алгебра оценок d(x) = x + g(x)

Оценка - линейная комбинация строительных блоков:
Identity, Constant(c), HingePlus(λ) = (x-λ)⁺, HingeMinus(λ) = min(x-λ, 0).
Оператор K линеен, поэтому риск любой кусочно-линейной оценки
сводится к сдвигам шарнирного ядра h.
"""

import json
import math
import hashlib
from dataclasses import dataclass, field
from typing import Tuple, List, Dict, Any, Callable, Optional

import numpy as np

from .types import ConfigError, PreconditionError, QuadratureError, get_default_config
from .measures import gauss_legendre, integrate_segments

IDENTITY = 'identity'
CONSTANT = 'constant'
HINGE_PLUS = 'hinge_plus'
HINGE_MINUS = 'hinge_minus'

BLOCK_KINDS = (IDENTITY, CONSTANT, HINGE_PLUS, HINGE_MINUS)


@dataclass(frozen=True)
class BuildingBlock:
    """
    Строительный блок

    Args:
        kind: identity | constant | hinge_plus | hinge_minus
        param: Значение константы или узел λ шарнира
    """
    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ConfigError(f"Неизвестный блок: {self.kind}")
        object.__setattr__(self, 'param', float(self.param))
        if not math.isfinite(self.param):
            raise PreconditionError("Параметр блока должен быть конечным")

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == IDENTITY:
            return x
        if self.kind == CONSTANT:
            return np.full_like(x, self.param)
        if self.kind == HINGE_PLUS:
            return np.maximum(x - self.param, 0.0)
        return np.minimum(x - self.param, 0.0)

    def derivative(self, x) -> np.ndarray:
        """Правая производная (в узле HingePlus даёт 1, HingeMinus - 0)"""
        x = np.asarray(x, dtype=float)
        if self.kind == IDENTITY:
            return np.ones_like(x)
        if self.kind == CONSTANT:
            return np.zeros_like(x)
        if self.kind == HINGE_PLUS:
            return (x >= self.param).astype(float)
        return (x < self.param).astype(float)

    @property
    def is_hinge(self) -> bool:
        return self.kind in (HINGE_PLUS, HINGE_MINUS)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == CONSTANT:
            return {'kind': self.kind, 'value': self.param}
        if self.is_hinge:
            return {'kind': self.kind, 'knot': self.param}
        return {'kind': self.kind}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BuildingBlock':
        kind = data.get('kind')
        allowed = {'kind', 'value'} if kind == CONSTANT else {'kind', 'knot'}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"Неизвестные поля блока {kind}: {sorted(unknown)}")
        if kind == CONSTANT:
            return cls(kind, data.get('value', 0.0))
        return cls(kind, data.get('knot', 0.0))


def hinge_plus(knot: float) -> BuildingBlock:
    return BuildingBlock(HINGE_PLUS, knot)


def hinge_minus(knot: float) -> BuildingBlock:
    return BuildingBlock(HINGE_MINUS, knot)


IDENTITY_BLOCK = BuildingBlock(IDENTITY)


@dataclass(frozen=True)
class EstimatorExpr:
    """
    Линейная комбинация блоков

    Args:
        terms: Пары (коэффициент, блок)
        label: Человекочитаемое имя ('soft(2)')
        error_bound: Оценка погрешности дискретизации (для smooth_expr)
    """
    terms: Tuple[Tuple[float, BuildingBlock], ...] = ()
    label: str = ""
    error_bound: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'terms', tuple((float(c), b) for c, b in self.terms))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for coeff, block in self.terms:
            out = out + coeff * block.evaluate(x)
        return out

    __call__ = evaluate

    def derivative(self, x) -> np.ndarray:
        """Правая производная почти всюду"""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for coeff, block in self.terms:
            out = out + coeff * block.derivative(x)
        return out

    def knots(self) -> Tuple[float, ...]:
        return tuple(sorted({block.param for _, block in self.terms if block.is_hinge}))

    def to_dict(self) -> Dict[str, Any]:
        return {'terms': [[coeff, block.to_dict()] for coeff, block in self.terms]}

    @property
    def estimator_id(self) -> str:
        if self.label:
            return self.label
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]

    def __add__(self, other: 'EstimatorExpr') -> 'EstimatorExpr':
        return merge_terms(self.terms + other.terms)

    def scaled(self, k: float) -> 'EstimatorExpr':
        return EstimatorExpr(tuple((k * c, b) for c, b in self.terms), error_bound=abs(k) * self.error_bound)


def merge_terms(terms, label: str = "", error_bound: float = 0.0) -> EstimatorExpr:
    """Сложить коэффициенты одинаковых блоков, убрать нулевые"""
    merged: Dict[BuildingBlock, float] = {}
    for coeff, block in terms:
        merged[block] = merged.get(block, 0.0) + coeff
    kept = tuple((c, b) for b, c in merged.items() if c != 0.0)
    return EstimatorExpr(kept, label=label, error_bound=error_bound)


def evaluate(expr: EstimatorExpr, x) -> np.ndarray:
    return expr.evaluate(x)


def identity_expr() -> EstimatorExpr:
    return EstimatorExpr(((1.0, IDENTITY_BLOCK),), label="identity")


def zero_expr() -> EstimatorExpr:
    """d ≡ 0"""
    return EstimatorExpr((), label="zero")


def _check_lambda(lam: float):
    if not (lam > 0 and math.isfinite(lam)):
        raise PreconditionError(f"Порог должен быть > 0: {lam}")


def soft_expr(lam: float) -> EstimatorExpr:
    """
    Мягкий порог T^S_λ(x) = sgn(x)(|x|-λ)⁺

    T^S_λ = x - g⁺₀ + g⁺_λ - g⁻₀ + g⁻_{-λ}
    """
    _check_lambda(lam)
    terms = (
        (1.0, IDENTITY_BLOCK),
        (-1.0, hinge_plus(0.0)),
        (1.0, hinge_plus(lam)),
        (-1.0, hinge_minus(0.0)),
        (1.0, hinge_minus(-lam)),
    )
    return EstimatorExpr(terms, label=f"soft({lam:g})")


def mid_expr(lam: float) -> EstimatorExpr:
    """
    Средний порог T^M_λ: x при |x| >= λ, 2(|x|-λ/2)⁺sgn(x) при |x| < λ

    T^M_λ = x - g⁺₀ + 2g⁺_{λ/2} - g⁺_λ - g⁻₀ + 2g⁻_{-λ/2} - g⁻_{-λ}
    """
    _check_lambda(lam)
    half = 0.5 * lam
    terms = (
        (1.0, IDENTITY_BLOCK),
        (-1.0, hinge_plus(0.0)),
        (2.0, hinge_plus(half)),
        (-1.0, hinge_plus(lam)),
        (-1.0, hinge_minus(0.0)),
        (2.0, hinge_minus(-half)),
        (-1.0, hinge_minus(-lam)),
    )
    return EstimatorExpr(terms, label=f"mid({lam:g})")


def residual(expr: EstimatorExpr) -> EstimatorExpr:
    """g = d - id"""
    label = f"residual({expr.label})" if expr.label else ""
    return merge_terms(expr.terms + ((-1.0, IDENTITY_BLOCK),), label=label,
                       error_bound=expr.error_bound)


def _hinge_expansion(g_prime_at_0: float, g_second: Callable, lo: float, hi: float,
                     nodes: int) -> List[Tuple[float, BuildingBlock]]:
    t, wt = gauss_legendre(2)
    panels = nodes // 2
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    w = (half[:, None] * wt[None, :]).ravel()
    values = np.asarray(g_second(y), dtype=float)
    if values.shape != y.shape:
        values = np.broadcast_to(values, y.shape)
    if not np.all(np.isfinite(values)):
        raise QuadratureError("g'' не конечна в узлах квадратуры")
    terms = [(float(g_prime_at_0), hinge_plus(0.0))]
    terms.extend((float(wi * vi), hinge_plus(float(yi))) for yi, wi, vi in zip(y, w, values))
    return terms


def smooth_expr(g_prime_at_0: float, g_second: Callable, support: Tuple[float, float],
                nodes: Optional[int] = None) -> EstimatorExpr:
    """
    Остаток g ∈ C² с g(0) = 0 как сумма шарниров

    g(x) = g'(0⁺)x⁺ + ∫₀^R (x-y)⁺ g''(y) dy дискретизируется составной
    квадратурой Гаусса-Лежандра (2 узла на панель).

    Args:
        g_prime_at_0: g'(0⁺)
        g_second: Векторизованная g'' на [0, R]
        support: Усечённый носитель (0, R)
        nodes: Число узлов (по умолчанию из конфигурации)

    Returns:
        EstimatorExpr: Разложение; error_bound - расхождение с разложением
        на вдвое меньшем числе узлов на сетке 257 точек

    Raises:
        QuadratureError: g'' не интегрируема на носителе
    """
    config = get_default_config()
    nodes = int(nodes or config.smooth_nodes)
    nodes = max(2, nodes + (nodes % 2))
    lo, hi = float(support[0]), float(support[1])
    if not (0.0 <= lo < hi and math.isfinite(hi)):
        raise PreconditionError(f"Некорректный носитель g'': {support}")
    integrate_segments(lambda s: float(np.asarray(g_second(np.array([s])), dtype=float).ravel()[0]),
                       lo, hi, (), config)

    fine = merge_terms(_hinge_expansion(g_prime_at_0, g_second, lo, hi, nodes))
    if nodes >= 4:
        coarse = merge_terms(_hinge_expansion(g_prime_at_0, g_second, lo, hi, nodes // 2))
        grid = np.linspace(lo, hi, 257)
        bound = float(np.max(np.abs(fine.evaluate(grid) - coarse.evaluate(grid))))
    else:
        bound = math.inf
    return EstimatorExpr(fine.terms, label=f"smooth[{nodes}]", error_bound=bound)


# ==================== JSON ====================

def estimator_from_dict(data: Dict[str, Any]) -> EstimatorExpr:
    """
    Оценка из JSON

    Форматы: {"type": "soft"|"mid", "lambda": λ} или {"terms": [[c, {"kind": ..., "knot": ...}], ...]}
    """
    if not isinstance(data, dict):
        raise ConfigError("Описание оценки должно быть объектом JSON")
    if 'terms' in data:
        unknown = set(data) - {'terms', 'label'}
        if unknown:
            raise ConfigError(f"Неизвестные поля оценки: {sorted(unknown)}")
        try:
            terms = tuple((float(c), BuildingBlock.from_dict(b)) for c, b in data['terms'])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Некорректные термы оценки: {str(e)}")
        return EstimatorExpr(terms, label=data.get('label', ''))
    unknown = set(data) - {'type', 'lambda'}
    if unknown:
        raise ConfigError(f"Неизвестные поля оценки: {sorted(unknown)}")
    kind = data.get('type')
    if 'lambda' not in data:
        raise ConfigError("Не задан lambda")
    lam = float(data['lambda'])
    if kind == 'soft':
        return soft_expr(lam)
    if kind == 'mid':
        return mid_expr(lam)
    raise ConfigError(f"Неизвестный тип оценки: {kind!r}")


def estimator_to_dict(expr: EstimatorExpr) -> Dict[str, Any]:
    if expr.label.startswith(('soft(', 'mid(')):
        kind, rest = expr.label.split('(', 1)
        lam = float(rest.rstrip(')'))
        if kind == 'soft' and expr == soft_expr(lam):
            return {'type': 'soft', 'lambda': lam}
        if kind == 'mid' and expr == mid_expr(lam):
            return {'type': 'mid', 'lambda': lam}
    return expr.to_dict()
