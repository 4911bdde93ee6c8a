"""
Тесты оператора K: шарнирные ядра, квадратура, спектральный путь
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
from core.stein.kernel import *
from core.stein.noise_models import model_from_dict
from core.stein.measures import cached_table, clear_table_cache


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def _bump_prime(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, _bump(x) * (-2.0 * x / (safe * safe)), 0.0)


def test_laplace_closed_form_matches_quadrature():
    """Тест: замкнутая форма h Лапласа совпадает с квадратурой в 2001 точке"""
    grid = np.linspace(-10.0, 10.0, 2001)
    g = EstimatorExpr(((1.0, hinge_plus(0.0)),))

    numeric = levy_K(LaplaceNoise(1.0), g, grid)
    assert np.max(np.abs(numeric - laplace_hinge(grid))) < 1e-6
    assert np.max(np.abs(hinge_kernel(LaplaceNoise(1.0))(grid) - laplace_hinge(grid))) < 1e-12


def test_gamma_closed_form():
    """Тест: h гамма-закона равно t*min(e^y, 1)"""
    grid = np.linspace(-8.0, 8.0, 161)
    g = EstimatorExpr(((1.0, hinge_plus(0.0)),))
    expected = 2.0 * np.exp(np.minimum(grid, 0.0))

    assert np.max(np.abs(levy_K(GammaNoise(2.0), g, grid) - expected)) < 1e-7
    assert np.allclose(hinge_kernel(GammaNoise(2.0))(grid), expected, rtol=0, atol=1e-12)


def test_sech_closed_form():
    """Тест замкнутой формы шарнира sech"""
    grid = np.array([-6.0, -2.5, -0.7, -0.1, 0.0, 0.3, 1.0, 3.3, 7.0])
    g = EstimatorExpr(((1.0, hinge_plus(0.0)),))

    numeric = levy_K(SechNoise(1.0), g, grid)
    assert np.max(np.abs(numeric - sech_hinge(grid))) < 1e-7


def test_hinge_kernel_limits_and_monotone():
    """Тест: h монотонно растёт от 0 до σ²"""
    y = np.linspace(-40.0, 40.0, 801)
    for model in (NormalNoise(2.0), LaplaceNoise(1.0), GammaNoise(2.0), SechNoise(1.0),
                  LaplaceNoise(2.0), GammaNoise(3.0).scaled(-1.0)):
        h = hinge_kernel(model)(y)
        assert np.all(np.diff(h) >= -1e-12), model
        assert h[0] == pytest.approx(0.0, abs=1e-8)
        assert h[-1] == pytest.approx(model.variance, abs=1e-8)


def test_hinge_kernel_preconditions():
    """Тест ошибок построения шарнирного ядра"""
    with pytest.raises(UnsupportedModelError):
        hinge_kernel(UniformNoise(1.0))
    with pytest.raises(PreconditionError):
        hinge_kernel(LaplaceNoise(1.0, shift=1.0))


def test_apply_K_matches_quadrature():
    """Тест: K по блокам совпадает с прямой квадратурой, в т.ч. со сдвигом"""
    x = np.linspace(-4.05, 4.05, 28)
    models = (LaplaceNoise(1.0), GammaNoise(2.0), SechNoise(1.0),
              LaplaceNoise(1.0, shift=0.3), GammaNoise(2.0).scaled(-0.5))
    for model in models:
        for expr in (residual(soft_expr(2.0)), residual(mid_expr(2.0)), soft_expr(1.0)):
            by_blocks = apply_K(model, expr, x)
            direct = levy_K(model, expr, x)
            assert np.max(np.abs(by_blocks - direct)) < 1e-7, (model, expr.label)


def test_apply_K_normal_is_derivative():
    """Тест: для нормального закона K(g) = σ²g'"""
    x = np.array([-3.0, -1.5, 0.5, 2.5])
    g = residual(soft_expr(2.0))
    assert np.allclose(apply_K(NormalNoise(1.5), g, x), 1.5 * g.derivative(x), atol=1e-12)


def test_constant_block():
    """Тест: K(c) = b*c и нулевое для центрированного закона"""
    expr = EstimatorExpr(((1.0, BuildingBlock('constant', 2.0)),))
    assert np.allclose(apply_K(LaplaceNoise(1.0), expr, np.array([0.0, 1.0])), 0.0)
    assert np.allclose(apply_K(LaplaceNoise(1.0, shift=0.5), expr, np.array([0.0, 1.0])), 1.0)


def test_compound_poisson_dual_path():
    """Тест: свёрточная форма сложного пуассоновского ядра совпадает с levy_K"""
    rng = np.random.default_rng(11)
    jump = JumpLaw.normal(0.5, 1.0)
    model = CompoundPoissonNoise(3.0, jump)
    g = residual(soft_expr(1.0))
    x = rng.uniform(-4.0, 4.0, 20)

    direct = levy_K(model, g, x)
    by_convolution = compound_poisson_K(3.0, jump, g, x)
    assert np.max(np.abs(direct - by_convolution)) < 1e-6

    # явная свёртка k * g
    for t in x[:3]:
        fn = lambda u, t=t: float(compound_poisson_kernel(3.0, jump, u)) * float(g.evaluate(t - u))
        value, _ = integrate.quad(fn, -15.0, 15.0, points=[t - 1.0, t, t + 1.0], limit=200)
        assert value == pytest.approx(float(compound_poisson_K(3.0, jump, g, t)), abs=1e-6)


def test_compound_poisson_rate_positive():
    """Тест: интенсивность должна быть положительной"""
    with pytest.raises(PreconditionError):
        compound_poisson_K(0.0, JumpLaw.normal(), np.sin, 0.0)


@pytest.mark.parametrize("model", [LaplaceNoise(1.0), GammaNoise(2.0)])
def test_spectral_matches_quadrature(model):
    """Тест: спектральный путь совпадает с квадратурой на гладком финитном g"""
    grid = spectral_grid(model, 1.0)
    spectral = spectral_K(model, _bump, grid, g_radius=1.0)

    n = len(grid)
    idx = np.arange(n // 4, 3 * n // 4, 512)
    direct = levy_K(model, lambda s: float(_bump(s)), grid[idx],
                    g_prime=lambda s: float(_bump_prime(s)), knots=(-1.0, 1.0))
    rel = np.max(np.abs(spectral[idx] - direct)) / np.max(np.abs(direct))
    assert rel < 1e-3


def test_spectral_wrap_detected():
    """Тест: слишком короткая сетка даёт ошибку наложения"""
    grid = np.linspace(-1.0, 1.0, 64, endpoint=False)
    with pytest.raises(SpectralWrapError):
        spectral_K(LaplaceNoise(1.0), _bump, grid)
    assert not np.any(spectral_K(LaplaceNoise(1.0), np.zeros(64), grid))


def test_transformation_rules():
    """Тест четырёх правил преобразования K на 20 случайных наборах"""
    rng = np.random.default_rng(7)
    models = [LaplaceNoise(1.0), GammaNoise(2.0), SechNoise(1.0), NormalNoise(0.5),
              CompoundPoissonNoise(2.0, JumpLaw.normal(0.3, 0.5))]
    functions = [
        (np.sin, np.cos),
        (np.tanh, lambda s: 1.0 / np.cosh(s) ** 2),
        (np.arctan, lambda s: 1.0 / (1.0 + s * s)),
    ]
    grid = np.linspace(-2.0, 2.0, 5)

    worst = 0.0
    for _ in range(20):
        i, j = rng.choice(len(models), size=2)
        g, g_prime = functions[rng.integers(len(functions))]
        b = float(rng.uniform(-1.0, 1.0))
        c = float(rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]))
        report = check_transformation_rules(models[i], models[j], g, b, c, grid, g_prime=g_prime)
        assert set(report.deviations) == {'translation', 'shift', 'convolution', 'scaling'}
        worst = max(worst, report.max_deviation)
    assert worst < 1e-6


def test_clt_limit():
    """Тест: K для нормированной суммы сходится к σ²g' монотонно"""
    for x in (0.0, 1.0):
        errors = [abs(clt_K(LaplaceNoise(1.0), n, np.sin, x, g_prime=np.cos) - math.cos(x))
                  for n in (1, 4, 16, 64, 256)]
        assert all(a > b for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 0.01


def test_clt_error_rate():
    """Тест: для Лапласа K_n(sin) = 2n/(2n+1) cos x"""
    for n in (1, 4):
        value = clt_K(LaplaceNoise(1.0), n, np.sin, 0.0, g_prime=np.cos)
        assert value == pytest.approx(2 * n / (2 * n + 1), abs=1e-7)


def test_levy_K_full_output():
    """Тест возврата оценки погрешности"""
    value, err = levy_K(LaplaceNoise(1.0), residual(soft_expr(1.0)), 0.5, full_output=True)
    assert isinstance(value, float)
    assert 0.0 <= err < 1e-6



def _laplace_triple():
    """Лаплас единичной дисперсии, заданный только мерой скачков"""
    return model_from_dict({
        'family': 'generic_id',
        'jump_measure': {'parts': [{'kind': 'power_exponential', 'coef': 1.0, 'power': 1.0,
                                    'rate': math.sqrt(2.0), 'side': 'both'}]},
    })


def _wide_convolution():
    return GenericIDNoise.combine([(1, LaplaceNoise(1.0).scaled(0.1 * (i + 1))) for i in range(9)])


def test_tabulated_kernels_build():
    """Тест: табличные ядра строятся для пуассоновского закона, тройки и широкой свёртки"""
    clear_table_cache()
    y = np.linspace(-30.0, 30.0, 601)
    for model in (CompoundPoissonNoise(3.0, JumpLaw.normal(0.0, 1.0)), _laplace_triple(),
                  _wide_convolution()):
        kernel = hinge_kernel(model)
        h = kernel(y)
        assert kernel.exactness == 'quadrature', model.family
        assert np.all(np.diff(h) >= -1e-10), model.family
        assert h[0] == pytest.approx(0.0, abs=1e-8)
        assert h[-1] == pytest.approx(model.variance, abs=1e-8)
        assert hinge_kernel(model) is kernel


def test_raw_triple_matches_laplace():
    """Тест: шарнир тройки с мерой Лапласа совпадает с замкнутой формой"""
    y = np.linspace(-6.0, 6.0, 121)
    assert np.max(np.abs(hinge_kernel(_laplace_triple())(y) - laplace_hinge(y))) < 1e-7


def test_tabulated_apply_K_matches_quadrature():
    """Тест: K по табличному ядру совпадает с прямой квадратурой"""
    x = np.array([-2.5, -0.7, 0.4, 1.9])
    g = residual(soft_expr(1.0))
    for model in (CompoundPoissonNoise(3.0, JumpLaw.normal(0.5, 1.0)).centered(), _laplace_triple(),
                  _wide_convolution()):
        assert np.max(np.abs(apply_K(model, g, x) - levy_K(model, g, x))) < 1e-6, model.family


def test_wide_convolution_kernel_is_sum():
    """Тест: ядро широкой свёртки равно сумме ядер компонент"""
    model = _wide_convolution()
    y = np.linspace(-3.0, 3.0, 61)
    exact = sum(hinge_kernel(law)(y) for _, law in model.components)
    assert np.max(np.abs(hinge_kernel(model)(y) - exact)) < 1e-7


def test_table_cache_follows_config():
    """Тест: таблица строится заново при смене параметров сетки"""
    model = CompoundPoissonNoise(2.0, JumpLaw.normal(0.3, 0.5))
    default = hinge_kernel(model)
    set_default_config(SteinConfig(hinge_grid_step=2e-3))
    try:
        coarse = hinge_kernel(model)
        assert coarse is not default
        assert hinge_kernel(model) is coarse
    finally:
        set_default_config(SteinConfig())
    assert hinge_kernel(model) is default



def test_table_cache_nested_build():
    """Тест: фабрика может сама обращаться к кэшу за другой таблицей"""
    clear_table_cache()
    calls = []

    def inner():
        calls.append('inner')
        return 'inner-table'

    def outer():
        calls.append('outer')
        return cached_table('nested:inner', inner) + '+outer'

    assert cached_table('nested:outer', outer) == 'inner-table+outer'
    assert cached_table('nested:outer', outer) == 'inner-table+outer'
    assert calls == ['outer', 'inner']
    clear_table_cache()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
