"""
Тесты типов данных подсистемы оценки риска
"""

import sys
import os
import math
import pytest
import numpy as np

# Добавляем корень проекта в путь для импорта
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.stein.types import *


def _density(x):
    return np.exp(-np.abs(x))


def test_measure_pushforward_scales_mass():
    """Тест образа меры: атомы (a, w) -> (ca, c²w)"""
    spec = MeasureSpec(atoms=((1.5, 2.0), (-0.5, 1.0)))
    pushed = spec.pushforward(-2.0)

    assert pushed.atoms == ((-3.0, 8.0), (1.0, 4.0))
    assert pushed.atom_mass() == 12.0
    assert pushed.radius == 3.0


def test_measure_part_pdf_pushforward():
    """Тест плотности части меры после образа x -> c*x"""
    part = MeasurePart(density=_density, support=(-5.0, 5.0))
    pushed = part.pushforward(2.0)

    assert pushed.bounds == (-10.0, 10.0)
    y = np.array([-3.0, 0.5, 4.0])
    assert np.allclose(pushed.pdf(y), 2.0 * _density(y / 2.0))
    assert pushed.pdf(np.array([11.0]))[0] == 0.0


def test_measure_validation():
    """Тест запрета атома в нуле и пустого носителя"""
    with pytest.raises(PreconditionError):
        MeasureSpec(atoms=((0.0, 1.0),))
    with pytest.raises(PreconditionError):
        MeasurePart(density=_density, support=(1.0, 1.0))
    with pytest.raises(DegenerateLawError):
        MeasureSpec().pushforward(0.0)


def test_levy_triple_algebra():
    """Тест сложения и масштабирования тройки"""
    a = LevyTriple(drift_b=1.0, gaussian_var=0.5, jump_measure=MeasureSpec(atoms=((1.0, 1.0),)))
    b = LevyTriple(drift_b=-0.25, gaussian_var=1.5)

    total = a.plus(b)
    assert total.drift_b == 0.75
    assert total.gaussian_var == 2.0
    assert total.jump_measure.atoms == ((1.0, 1.0),)

    scaled = a.pushforward(-2.0)
    assert scaled.drift_b == -2.0
    assert scaled.gaussian_var == 2.0
    assert scaled.jump_measure.atoms == ((-2.0, 4.0),)

    tripled = a.times(3)
    assert tripled.gaussian_var == 1.5
    assert tripled.jump_measure.atoms == ((1.0, 3.0),)

    with pytest.raises(PreconditionError):
        LevyTriple(gaussian_var=-1.0)


def test_risk_curve_indexing():
    """Тест доступа к строкам кривой риска"""
    x = np.array([0.0, 1.0])
    curve = RiskCurve(x=x, risk=np.array([-1.0, 0.0]), variance_term=np.ones(2),
                      g_squared=np.array([0.0, 1.0]), cross_term=np.array([-2.0, -2.0]),
                      model_id="m", estimator_id="soft(2)")

    assert len(curve) == 2
    est = curve[1]
    assert est.value == 0.0
    assert est.x == 1.0
    assert est.to_dict()['risk'] == 0.0
    assert est.to_dict()['estimator_id'] == "soft(2)"
    assert list(curve.rows())[0] == (0.0, -1.0, 1.0, 0.0, -2.0)


def test_stein_check_verdict():
    """Тест вердикта Монте-Карло проверки"""
    check = SteinCheck(lhs=1.0, rhs=1.3, se=0.1, n=1000, theta=0.0)

    assert check.z_score == pytest.approx(3.0)
    assert check.passed(4.0)
    assert not check.passed(2.0)

    lhs, rhs, se = check
    assert (lhs, rhs, se) == (1.0, 1.3, 0.1)
    assert SteinCheck(lhs=1.0, rhs=1.0, se=0.0, n=1, theta=0.0).z_score == 0.0


def test_threshold_choice_json_key():
    """Тест ключа lambda в отчёте порога"""
    choice = ThresholdChoice(level=2, lambda_=1.5, risk=3.0, n_candidates=10, noise_variance=1.0)
    data = choice.to_dict()

    assert data['lambda'] == 1.5
    assert 'lambda_' not in data
    assert data['band'] == 'detail'


def test_decomposition_bands_order():
    """Тест порядка полос: аппроксимация, затем детали от грубых к мелким"""
    approx = LevelCoeffs(level=2, coeffs=np.array([2.0]), n_total=4, band='approx')
    d2 = LevelCoeffs(level=2, coeffs=np.array([1.0]), n_total=4)
    d1 = LevelCoeffs(level=1, coeffs=np.array([0.0, 1.0]), n_total=4)
    dec = Decomposition(approx=approx, details=[d2, d1], wavelet='haar', n_total=4)

    assert [b.label for b in dec.bands] == ['approx2', 'detail2', 'detail1']
    assert dec.levels == 2
    assert dec.energy() == 6.0


def test_config_validation():
    """Тест валидации и нормализации конфигурации"""
    with pytest.raises(ConfigError):
        SteinConfig(quad_tol=-1.0)
    with pytest.raises(ConfigError):
        SteinConfig(spectral_points=1000)
    with pytest.raises(ConfigError):
        SteinConfig(output_digits=20)

    config = SteinConfig(smooth_nodes=7, mc_chunk=10, workers=0)
    assert config.smooth_nodes == 8
    assert config.mc_chunk == 1024
    assert config.workers == 1


def test_config_overrides():
    """Тест переопределения полей"""
    config = SteinConfig().with_overrides(quad_tol=1e-8)
    assert config.quad_tol == 1e-8

    with pytest.raises(ConfigError):
        SteinConfig().with_overrides(no_such_field=1)
    with pytest.raises(ConfigError):
        SteinConfig.from_dict({'quad_tol': 1e-9, 'colour': 'red'})


def test_config_yaml_roundtrip(tmp_path):
    """Тест сохранения и загрузки YAML"""
    path = str(tmp_path / "stein.yaml")
    config = SteinConfig(quad_tol=1e-9, mc_samples=1000)
    config.to_yaml(path)

    loaded = SteinConfig.from_yaml(path)
    assert loaded == config


def test_config_from_env(monkeypatch):
    """Тест переменной окружения SUREID_QUAD_TOL"""
    monkeypatch.setenv('SUREID_QUAD_TOL', '1e-9')
    assert SteinConfig.from_env().quad_tol == 1e-9

    monkeypatch.setenv('SUREID_QUAD_TOL', 'abc')
    with pytest.raises(ConfigError):
        SteinConfig.from_env()


def test_error_hierarchy():
    """Тест иерархии исключений"""
    for cls in (UnsupportedModelError, PreconditionError, DegenerateLawError, QuadratureError,
                SamplingError, WaveletError, ThresholdSelectionError, ConfigError, SpectralWrapError):
        assert issubclass(cls, SteinError)

    err = QuadratureError("не сошлась", achieved_tolerance=1e-5)
    assert err.achieved_tolerance == 1e-5
    assert math.isinf(QuadratureError("x").achieved_tolerance)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
