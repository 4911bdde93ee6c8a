"""
Тесты Монте-Карло оракула
"""

import sys
import os
import math
import pytest
import numpy as np

# Добавляем корень проекта в путь для импорта
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.stein.types import *
from core.stein.families import *
from core.stein.estimators import *
from core.stein.noise_models import model_from_dict
from core.stein.mc_oracle import *
from core.stein.risk import expected_risk

N = 200000
N_MOMENTS = 10 ** 6


def _laws():
    return [
        NormalNoise(1.0),
        LaplaceNoise(1.0),
        GammaNoise(2.0),
        SechNoise(1.0),
        UniformNoise(math.sqrt(3.0)),
        CompoundPoissonNoise(3.0, JumpLaw.normal(0.5, 1.0)).centered(),
    ]


def test_same_seed_same_batch():
    """Тест: одинаковое зерно даёт одинаковую выборку при любом числе потоков"""
    config = SteinConfig(mc_chunk=1024)
    model = LaplaceNoise(1.0)
    a = sample(model, 10000, seed=5, workers=1, config=config)
    b = sample(model, 10000, seed=5, workers=4, config=config)
    c = sample(model, 10000, seed=6, workers=1, config=config)

    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.count == 10000
    assert a.model_id == model.model_id


def test_sample_moments():
    """Тест: среднее и дисперсия выборки в пределах 5 стандартных ошибок"""
    for model in _laws():
        x = sample(model, N_MOMENTS, seed=1).values
        se_mean = math.sqrt(model.variance / N_MOMENTS)
        assert abs(np.mean(x) - model.mean) < 5 * se_mean, model

        centered = x - np.mean(x)
        m4 = np.mean(centered ** 4)
        se_var = math.sqrt(max(m4 - model.variance ** 2, 0.0) / N_MOMENTS)
        assert abs(np.var(x) - model.variance) < 5 * se_var, model


def test_gamma_third_moment():
    """Тест третьего центрального момента гамма-шума (2t)"""
    x = sample(GammaNoise(2.0), N_MOMENTS, seed=2).values
    c = x - np.mean(x)
    m3 = np.mean(c ** 3)
    se = math.sqrt(np.var(c ** 3) / N_MOMENTS)
    assert abs(m3 - 4.0) < 5 * se


def test_sech_quantile_roundtrip():
    """Тест: CDF(quantile(u)) = u"""
    u = np.linspace(0.001, 0.999, 99)
    assert np.max(np.abs(SechNoise.cdf(SechNoise.quantile(u)) - u)) < 1e-12


def test_sample_size_must_be_positive():
    """Тест: n >= 1"""
    with pytest.raises(SamplingError):
        sample(NormalNoise(1.0), 0, seed=1)


def test_generic_triple_sampling():
    """Тест моделирования закона, заданного тройкой Леви"""
    law = model_from_dict({
        'family': 'generic_id',
        'gaussian_var': 0.5,
        'jump_measure': {'parts': [{'kind': 'power_exponential', 'coef': 1.0, 'power': 1.0,
                                    'rate': math.sqrt(2.0), 'side': 'both'}]},
    })
    batch = sample(law, N, seed=4)

    assert batch.approximation_error >= 0.0
    assert abs(np.mean(batch.values)) < 5 * math.sqrt(1.5 / N)
    assert np.var(batch.values) == pytest.approx(1.5, rel=0.03)


def test_constant_g_identity():
    """Тест: при g = const левая часть равна нулю"""
    g = EstimatorExpr(((1.0, BuildingBlock('constant', 1.0)),))
    check = mc_stein_check(LaplaceNoise(1.0), g, 0.3, 50000, seed=1)

    assert check.lhs == 0.0
    assert abs(check.rhs) < 5 * math.sqrt(1.0 / 50000)


@pytest.mark.parametrize("model", [LaplaceNoise(1.0), GammaNoise(2.0)])
def test_stein_identity_monte_carlo(model):
    """Тест тождества Штейна для остатка мягкого порога"""
    check = mc_stein_check(model, residual(soft_expr(2.0)), 1.0, N, seed=11)

    assert check.passed(4.0)
    assert check.n == N
    assert check.se > 0


def test_corrupted_kernel_detected():
    """Тест: смена знака ядра обнаруживается"""
    model = LaplaceNoise(1.0)
    from core.stein.risk import apply_stein
    flipped = lambda expr, x: -apply_stein(model, expr, x)
    check = mc_stein_check(model, residual(soft_expr(1.0)), 0.0, N, seed=11, kernel=flipped)
    assert not check.passed(4.0)


def test_mc_risk_trivial_estimators():
    """Тест: риск id равен σ², риск нуля равен θ²"""
    model = LaplaceNoise(1.0)
    ident = mc_risk(model, identity_expr(), 0.5, N, seed=2)
    zero = mc_risk(model, zero_expr(), 0.5, N, seed=2)

    assert abs(ident.value - 1.0) < 4 * ident.standard_error
    assert zero.value == pytest.approx(0.25)
    assert zero.standard_error == 0.0


def test_mc_risk_matches_quadrature():
    """Тест: Монте-Карло и квадратура дают один риск"""
    model = LaplaceNoise(1.0)
    expr = soft_expr(2.0)
    mc = mc_risk(model, expr, 1.0, N, seed=8)
    quad = expected_risk(model, expr, 1.0)
    assert abs(mc.value - quad.value) < 4 * mc.standard_error


def test_mc_unbiasedness():
    """Тест парной проверки несмещённости"""
    for model in (LaplaceNoise(1.0), UniformNoise(math.sqrt(3.0))):
        check = mc_unbiasedness(model, soft_expr(2.0), 0.7, N, seed=9)
        assert check.passed(4.0), model


def test_results_independent_of_workers():
    """Тест: редукции не зависят от числа потоков"""
    config = SteinConfig(mc_chunk=1024)
    g = residual(soft_expr(1.0))
    one = mc_stein_check(GammaNoise(2.0), g, 0.5, 20000, seed=3, workers=1, config=config)
    four = mc_stein_check(GammaNoise(2.0), g, 0.5, 20000, seed=3, workers=4, config=config)
    assert one == four



def test_compound_poisson_third_moment():
    """Тест асимметрии сложного пуассоновского шума: λ(μ³ + 3μs²)"""
    model = CompoundPoissonNoise(3.0, JumpLaw.normal(0.5, 1.0)).centered()
    x = sample(model, N_MOMENTS, seed=7).values
    c = x - np.mean(x)
    m3 = np.mean(c ** 3)
    se = math.sqrt(np.var(c ** 3) / N_MOMENTS)
    assert abs(m3 - 3.0 * (0.125 + 1.5)) < 5 * se


def _tabulated_laws():
    return [
        CompoundPoissonNoise(3.0, JumpLaw.normal(0.5, 1.0)).centered(),
        model_from_dict({
            'family': 'generic_id',
            'jump_measure': {'parts': [{'kind': 'power_exponential', 'coef': 2.0, 'power': 1.0,
                                        'rate': 1.0, 'side': '+'}]},
        }),
        GenericIDNoise.combine([(1, LaplaceNoise(1.0).scaled(0.1 * (i + 1))) for i in range(9)]),
    ]


@pytest.mark.parametrize("index", [0, 1, 2])
def test_stein_identity_tabulated_kernels(index):
    """Тест тождества Штейна для законов с табличным ядром"""
    model = _tabulated_laws()[index]
    check = mc_stein_check(model, residual(soft_expr(1.0)), 0.5, 200000, seed=13)

    assert check.passed(4.0), (model.family, check.lhs, check.rhs, check.se)
    assert check.model_id == model.model_id


def test_stein_identity_arbitrary_function():
    """Тест: g может быть любой функцией массива, K считается квадратурой"""
    for model in (LaplaceNoise(1.0), GammaNoise(2.0)):
        check = mc_stein_check(model, np.tanh, 0.3, 200000, seed=17,
                               g_prime=lambda s: 1.0 / np.cosh(s) ** 2)
        assert check.passed(4.0), model.family
        assert check.se > 0

    flipped = lambda g, y: -np.cos(y)
    check = mc_stein_check(LaplaceNoise(1.0), np.sin, 0.0, 200000, seed=17, kernel=flipped)
    assert not check.passed(4.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
