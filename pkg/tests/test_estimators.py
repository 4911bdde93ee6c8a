"""
Тесты алгебры оценок
"""

import sys
import os
import pytest
import numpy as np
import hypothesis.strategies as st
from hypothesis import given, settings

# Добавляем корень проекта в путь для импорта
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.stein.types import ConfigError, PreconditionError
from core.stein.estimators import *

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
thresholds = st.floats(min_value=0.01, max_value=10, allow_nan=False, allow_infinity=False)


@given(finite, thresholds)
def test_soft_matches_definition(x, lam):
    """Тест: мягкий порог из блоков совпадает с sgn(x)(|x|-λ)⁺"""
    value = float(soft_expr(lam).evaluate(x))
    expected = np.sign(x) * max(abs(x) - lam, 0.0)
    assert abs(value - expected) <= 1e-12 * (1 + abs(x))


@given(finite, thresholds)
def test_mid_matches_definition(x, lam):
    """Тест среднего порога"""
    value = float(mid_expr(lam).evaluate(x))
    if abs(x) >= lam:
        expected = x
    else:
        expected = 2 * np.sign(x) * max(abs(x) - lam / 2, 0.0)
    assert abs(value - expected) <= 1e-12 * (1 + abs(x))


@given(finite, thresholds)
def test_residual_is_difference(x, lam):
    """Тест: g = d - id"""
    d = soft_expr(lam)
    assert abs(float(residual(d).evaluate(x)) - (float(d.evaluate(x)) - x)) <= 1e-12 * (1 + abs(x))


@settings(max_examples=50)
@given(st.lists(finite, min_size=1, max_size=20), thresholds, thresholds)
def test_sum_is_linear(xs, a, b):
    """Тест линейности суммы оценок"""
    x = np.array(xs)
    total = soft_expr(a) + mid_expr(b)
    assert np.allclose(total.evaluate(x), soft_expr(a).evaluate(x) + mid_expr(b).evaluate(x),
                       rtol=0, atol=1e-10)


def test_soft_residual_terms():
    """Тест: остаток мягкого порога состоит из четырёх шарниров"""
    g = residual(soft_expr(2.0))

    assert len(g.terms) == 4
    assert all(block.is_hinge for _, block in g.terms)
    assert g.knots() == (-2.0, 0.0, 2.0)
    assert np.allclose(g.evaluate(np.array([-3.0, -1.0, 1.0, 3.0])), [2.0, 1.0, -1.0, -2.0])


def test_block_derivative_is_right_derivative():
    """Тест правой производной в узле"""
    assert float(hinge_plus(1.0).derivative(1.0)) == 1.0
    assert float(hinge_minus(1.0).derivative(1.0)) == 0.0
    assert float(hinge_minus(1.0).derivative(0.5)) == 1.0
    assert float(IDENTITY_BLOCK.derivative(7.0)) == 1.0


def test_merge_terms_cancels():
    """Тест слияния одинаковых блоков"""
    expr = merge_terms([(1.0, hinge_plus(1.0)), (-1.0, hinge_plus(1.0)), (2.0, IDENTITY_BLOCK)])

    assert expr.terms == ((2.0, IDENTITY_BLOCK),)
    assert zero_expr().evaluate(np.array([1.0, 2.0])).tolist() == [0.0, 0.0]
    assert identity_expr().evaluate(3.5) == 3.5


def test_lambda_must_be_positive():
    """Тест: порог должен быть положительным"""
    with pytest.raises(PreconditionError):
        soft_expr(0.0)
    with pytest.raises(PreconditionError):
        mid_expr(-1.0)


def test_estimator_json():
    """Тест JSON-описания оценок"""
    assert estimator_to_dict(soft_expr(2.0)) == {'type': 'soft', 'lambda': 2.0}
    assert estimator_from_dict({'type': 'mid', 'lambda': 1.5}) == mid_expr(1.5)

    custom = EstimatorExpr(((0.5, hinge_plus(1.0)), (-1.0, BuildingBlock('constant', 2.0))))
    restored = estimator_from_dict(estimator_to_dict(custom))
    x = np.linspace(-3, 3, 13)
    assert np.array_equal(restored.evaluate(x), custom.evaluate(x))

    with pytest.raises(ConfigError):
        estimator_from_dict({'type': 'hard', 'lambda': 1.0})
    with pytest.raises(ConfigError):
        estimator_from_dict({'type': 'soft'})
    with pytest.raises(ConfigError):
        estimator_from_dict({'type': 'soft', 'lambda': 1.0, 'extra': 1})
    with pytest.raises(ConfigError):
        BuildingBlock.from_dict({'kind': 'hinge_plus', 'value': 1.0})


def test_estimator_id():
    """Тест идентификатора оценки"""
    assert soft_expr(2.0).estimator_id == "soft(2)"
    unnamed = EstimatorExpr(((1.0, hinge_plus(0.0)),))
    assert len(unnamed.estimator_id) == 16
    assert unnamed.estimator_id == EstimatorExpr(((1.0, hinge_plus(0.0)),)).estimator_id


def test_smooth_expansion_converges():
    """Тест разложения гладкого остатка ((x-1)⁺)³ по шарнирам"""
    g_second = lambda y: 6.0 * np.maximum(np.asarray(y) - 1.0, 0.0)
    expr = smooth_expr(0.0, g_second, (0.0, 4.0), nodes=256)

    x = np.linspace(-1.0, 4.0, 501)
    exact = np.maximum(x - 1.0, 0.0) ** 3
    error = np.max(np.abs(expr.evaluate(x) - exact))
    assert error < 0.02
    assert 0.0 <= expr.error_bound < 0.05
    assert np.all(expr.evaluate(np.array([-1.0, -0.5, 0.0])) == 0.0)


def test_smooth_expansion_rejects_bad_support():
    """Тест: носитель g'' должен быть конечным и неотрицательным"""
    with pytest.raises(PreconditionError):
        smooth_expr(1.0, lambda y: np.zeros_like(y), (-1.0, 1.0))
    with pytest.raises(PreconditionError):
        smooth_expr(1.0, lambda y: np.zeros_like(y), (0.0, float('inf')))



def test_smooth_expansion_of_square():
    """Тест: x² на [0, 4] по 256 узлам с ошибкой < 1e-3"""
    expr = smooth_expr(0.0, lambda y: np.full_like(np.asarray(y, dtype=float), 2.0), (0.0, 4.0), nodes=256)

    x = np.linspace(0.0, 4.0, 801)
    assert np.max(np.abs(expr.evaluate(x) - x * x)) < 1e-3


def test_smooth_expansion_single_hinge():
    """Тест: g'' = 0, g'(0⁺) = 1 дают один шарнир в нуле"""
    expr = smooth_expr(1.0, lambda y: np.zeros_like(np.asarray(y, dtype=float)), (0.0, 1.0))
    assert expr.terms == ((1.0, hinge_plus(0.0)),)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
