"""
Тесты несмещённых оценок риска
"""

import sys
import os
import math
import pytest
import numpy as np
from scipy import integrate

# Добавляем корень проекта в путь для импорта
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.stein.types import *
from core.stein.families import *
from core.stein.estimators import *
from core.stein.noise_models import convolve
from core.stein.risk import (
    risk_curve, unbiased_risk, unbiased_risk_uniform_soft, expectation, expected_risk,
    mean_unbiased_risk, multivariate_risk, apply_stein
)


def test_gaussian_reduction():
    """Тест: для N(0, 1) оценка мягкого порога сводится к классической"""
    x = np.linspace(-6.0, 6.0, 241)
    for lam in np.linspace(0.5, 3.0, 11):
        keep = np.abs(np.abs(x) - lam) > 1e-9
        curve = risk_curve(NormalNoise(1.0), soft_expr(lam), x[keep])
        xs = x[keep]
        expected = 1.0 + np.minimum(xs ** 2, lam ** 2) - 2.0 * (np.abs(xs) < lam)
        assert np.max(np.abs(curve.risk - expected)) < 1e-12


def test_normal_soft_at_zero():
    """Тест: r(0) = -1 для N(0, 1) и λ = 2"""
    assert unbiased_risk(NormalNoise(1.0), soft_expr(2.0), 0.0).value == pytest.approx(-1.0, abs=1e-12)


def test_laplace_soft_at_zero():
    """Тест: r(0) = 1 + 2(h(-λ) - h(λ)) для Лапласа"""
    expected = 1.0 + 2.0 * (float(laplace_hinge(-2.0)) - float(laplace_hinge(2.0)))
    est = unbiased_risk(LaplaceNoise(1.0), soft_expr(2.0), 0.0)

    assert est.value == pytest.approx(expected, abs=1e-12)
    assert est.estimator_id == "soft(2)"


def test_curve_components_sum():
    """Тест: риск равен сумме трёх слагаемых"""
    x = np.linspace(-5.0, 5.0, 51)
    for model in (LaplaceNoise(1.0), GammaNoise(2.0), SechNoise(1.0), UniformNoise(math.sqrt(3.0))):
        curve = risk_curve(model, mid_expr(2.0), x)
        assert np.allclose(curve.risk, curve.variance_term + curve.g_squared + curve.cross_term,
                           rtol=0, atol=1e-14)
        assert np.all(curve.variance_term == model.variance)


def test_uniform_hinge_integral():
    """Тест: (1/2)∫₋₁¹ h(x+θ)dx = r(θ) для 101 значения θ"""
    for theta in np.linspace(-1.5, 1.5, 101):
        points = [p for p in (-theta, 2.0 - theta) if -1.0 < p < 1.0]
        value, _ = integrate.quad(lambda s: float(uniform_h(s + theta)), -1.0, 1.0,
                                  points=points or None, epsabs=1e-13, epsrel=1e-13)
        assert abs(0.5 * value - float(uniform_r(theta))) < 1e-10, theta


def test_uniform_spot_values():
    """Тест точных значений r(0), r(1), r(-1)"""
    assert float(uniform_r(0.0)) == 1.0 / 6.0
    assert float(uniform_r(1.0)) == 1.0 / 3.0
    assert float(uniform_r(-1.0)) == 0.0


def test_uniform_soft_at_zero():
    """Тест оценки риска мягкого порога при равномерном шуме"""
    a = math.sqrt(3.0)
    est = unbiased_risk_uniform_soft(a, 2.0, 0.0)
    assert est.value == pytest.approx(1.0 - 6.0 * float(uniform_h(2.0 / a)), abs=1e-12)

    curve = unbiased_risk_uniform_soft(a, 2.0, np.array([0.0, 1.0]))
    assert len(curve) == 2
    with pytest.raises(PreconditionError):
        unbiased_risk_uniform_soft(0.0, 2.0, 0.0)


def test_uniform_estimate_unbiased():
    """Тест несмещённости при равномерном шуме"""
    model = UniformNoise(math.sqrt(3.0))
    for theta in (-1.0, 0.4, 2.5):
        lhs = mean_unbiased_risk(model, soft_expr(2.0), theta)
        rhs = expected_risk(model, soft_expr(2.0), theta)
        assert rhs.method == 'quadrature'
        assert lhs == pytest.approx(rhs.value, abs=1e-7)


@pytest.mark.parametrize("model", [LaplaceNoise(1.0), GammaNoise(2.0), SechNoise(1.0)])
def test_estimate_unbiased(model):
    """Тест: E r^(X+θ) = E(d(X+θ) - θ)²"""
    for expr in (soft_expr(1.0), mid_expr(2.0)):
        for theta in (-1.0, 0.5, 2.0):
            lhs = mean_unbiased_risk(model, expr, theta)
            rhs = expected_risk(model, expr, theta).value
            assert lhs == pytest.approx(rhs, abs=1e-7), (expr.label, theta)


def test_identity_and_zero_risk():
    """Тест: риск тождественной оценки σ², нулевой - θ²"""
    model = LaplaceNoise(1.0)
    assert expected_risk(model, identity_expr(), 0.7).value == pytest.approx(1.0, abs=1e-9)
    assert expected_risk(model, zero_expr(), 0.7).value == pytest.approx(0.49, abs=1e-9)
    assert np.allclose(risk_curve(model, identity_expr(), np.array([-1.0, 3.0])).risk, 1.0)


def test_expected_risk_monte_carlo_for_generic_law():
    """Тест: закон без плотности идёт через Монте-Карло"""
    law = convolve(LaplaceNoise(1.0), GammaNoise(2.0))
    assert not law.has_density

    result = expected_risk(law, identity_expr(), 0.5, n_mc=200000, seed=3)
    assert result.method == 'monte_carlo'
    assert abs(result.value - 3.0) < 5 * result.standard_error
    with pytest.raises(UnsupportedModelError):
        mean_unbiased_risk(law, soft_expr(1.0), 0.0)


def test_expectation_of_constant():
    """Тест: E 1 = 1 и E X = 0"""
    for model in (LaplaceNoise(1.0), GammaNoise(2.0), UniformNoise(1.0)):
        assert expectation(model, lambda s: 1.0) == pytest.approx(1.0, abs=1e-9)
        assert expectation(model, lambda s: s) == pytest.approx(0.0, abs=1e-9)


def test_multivariate_risk():
    """Тест покоординатной оценки риска"""
    models = [LaplaceNoise(1.0), NormalNoise(1.0)]
    x = np.array([0.5, 3.0])
    expected = (unbiased_risk(models[0], soft_expr(1.0), 0.5).value
                + unbiased_risk(models[1], soft_expr(2.0), 3.0).value)

    assert multivariate_risk(models, [soft_expr(1.0), soft_expr(2.0)], x) == pytest.approx(expected)
    builder = lambda i, v: soft_expr(1.0 if i == 0 else 2.0)
    assert multivariate_risk(models, builder, x) == pytest.approx(expected)
    with pytest.raises(PreconditionError):
        multivariate_risk(models, [soft_expr(1.0)], np.array([1.0]))


def test_requires_centered_noise():
    """Тест: оценка риска требует центрированного шума"""
    with pytest.raises(PreconditionError):
        risk_curve(LaplaceNoise(1.0, shift=1.0), soft_expr(2.0), np.array([0.0]))
    with pytest.raises(PreconditionError):
        apply_stein(UniformNoise(1.0, shift=0.5), soft_expr(1.0), np.array([0.0]))



def test_large_threshold_limit():
    """Тест: при λ → ∞ оценка стремится к x² - σ²"""
    x = np.array([-1.5, 0.0, 0.5, 2.0])
    for model in (NormalNoise(1.0), LaplaceNoise(1.0), GammaNoise(2.0), SechNoise(1.0)):
        curve = risk_curve(model, soft_expr(50.0), x)
        assert np.allclose(curve.risk, x * x - model.variance, rtol=0, atol=1e-9), model.family


def test_uniform_large_threshold_average():
    """Тест: для равномерного шума предел x² - σ² достигается в среднем по периоду λ"""
    a = math.sqrt(3.0)
    x = np.array([-0.8, 0.3, 1.1])
    lambdas = 40.0 + 2.0 * a * (np.arange(2000) + 0.5) / 2000
    values = np.array([unbiased_risk_uniform_soft(a, lam, x).risk for lam in lambdas])
    assert np.allclose(values.mean(axis=0), x * x - 1.0, rtol=0, atol=1e-6)


def test_uniform_unbiased_reference_point():
    """Тест несмещённости при равномерном шуме: θ = 0.3, λ = 1"""
    for a in (1.0, math.sqrt(3.0)):
        model = UniformNoise(a)
        lhs = mean_unbiased_risk(model, soft_expr(1.0), 0.3)
        rhs = expected_risk(model, soft_expr(1.0), 0.3).value
        assert lhs == pytest.approx(rhs, abs=1e-8), a


def _shrink_to_mean(lam):
    """d_i = x̄ + soft_λ(x_i - x̄) для двух координат как функция x_i"""
    def build(i, x):
        other = float(x[1 - i])
        return EstimatorExpr((
            (0.5, IDENTITY_BLOCK),
            (1.0, BuildingBlock('constant', 0.5 * other)),
            (0.5, hinge_plus(other + 2.0 * lam)),
            (0.5, hinge_minus(other - 2.0 * lam)),
        ))
    return build


def test_multivariate_coupled_coordinates():
    """Тест: оценка со сжатием к среднему несмещена, хотя g₁ зависит от x₂"""
    rng = np.random.default_rng(21)
    lam, theta, n = 0.7, np.array([1.0, -0.5]), 20000
    models = [LaplaceNoise(1.0), LaplaceNoise(1.0)]
    obs = theta + np.column_stack([m.sample_chunk(rng, n) for m in models])

    builder = _shrink_to_mean(lam)
    estimates = np.array([multivariate_risk(models, builder, x) for x in obs])

    mean = obs.mean(axis=1, keepdims=True)
    shrunk = mean + np.sign(obs - mean) * np.maximum(np.abs(obs - mean) - lam, 0.0)
    losses = np.sum((shrunk - theta) ** 2, axis=1)

    diff = estimates - losses
    se = np.std(diff, ddof=1) / math.sqrt(n)
    assert abs(diff.mean()) < 4 * se


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
