"""
Главная система оценки риска

Объединяет подсистему Штейна в единый интерфейс:
- Кривые несмещённой оценки риска
- Проверки тождества Штейна (квадратура и Монте-Карло)
- Выбор порогов SureShrink и шумоподавление
- Журнал проверок и статистика
"""

import math
import logging
from typing import Optional, Dict, Any, List, Sequence, Tuple
from datetime import datetime

import numpy as np

from .stein.types import (
    SteinConfig, RiskCurve, ThresholdChoice, SteinError, QuadratureError,
    get_default_config, set_default_config
)
from .stein.interfaces import NoiseLaw
from .stein.families import NormalNoise, LaplaceNoise, GammaNoise, SechNoise
from .stein.estimators import EstimatorExpr, residual, soft_expr, mid_expr, hinge_plus
from .stein.noise_models import unit_variance_model
from .stein.risk import risk_curve, apply_stein, expectation
from .stein.mc_oracle import mc_stein_check
from .stein.wavelets import sure_select, denoise
from .stein.journal import VerificationJournal

logger = logging.getLogger(__name__)

DEFAULT_THETAS = (-3.0, -1.0, 0.0, 0.7, 2.0)
FIGURE_MODELS = ('normal', 'laplace', 'gamma', 'uniform')


def default_verify_models() -> Dict[str, NoiseLaw]:
    return {
        'normal': NormalNoise(1.0),
        'laplace': LaplaceNoise(1.0),
        'gamma2': GammaNoise(2.0),
        'sech': SechNoise(1.0),
    }


def default_verify_estimators() -> Dict[str, EstimatorExpr]:
    return {'soft1': soft_expr(1.0), 'soft2': soft_expr(2.0), 'mid2': mid_expr(2.0)}


def default_verify_functions() -> Dict[str, EstimatorExpr]:
    """Остатки g из матрицы проверки"""
    functions = {name: residual(expr) for name, expr in default_verify_estimators().items()}
    functions['hinge0.5'] = EstimatorExpr(((1.0, hinge_plus(0.5)),), label="hinge_plus(0.5)")
    return functions


class SureSystem:
    """
    Главная система оценки риска

    Предоставляет единый интерфейс:
    1. Кривые риска и рисунок для четырёх законов
    2. Проверка тождества Штейна по матрице (закон, θ, g)
    3. Выбор порога по SURE
    4. Шумоподавление с распространением шума по уровням
    5. Журнал и статистика
    """

    def __init__(self, config: Optional[SteinConfig] = None):
        """
        Args:
            config: Численная конфигурация (если None - по умолчанию)
        """
        self.config = config or get_default_config()
        # Таблицы ядер и квадратуры читают процессную конфигурацию
        set_default_config(self.config)

        self.journal = VerificationJournal({'max_entries': 10000})

        self._models_seen = set()
        self._stats = {
            'kernels_built': 0,
            'risk_evaluations': 0,
            'checks_run': 0,
            'checks_failed': 0,
            'thresholds_selected': 0,
            'errors': 0,
        }

    def _touch(self, model: NoiseLaw):
        if model.model_id not in self._models_seen:
            self._models_seen.add(model.model_id)
            self._stats['kernels_built'] += 1

    # ==================== РИСК ====================

    def risk_curve(self, model: NoiseLaw, expr: EstimatorExpr, xs) -> RiskCurve:
        """Кривая r^(x) на сетке"""
        try:
            self._touch(model)
            curve = risk_curve(model, expr, xs)
            self._stats['risk_evaluations'] += len(curve)
            return curve
        except SteinError:
            self._stats['errors'] += 1
            raise

    def figure(self, xs, lam: float = 2.0) -> Dict[str, RiskCurve]:
        """Кривые риска мягкого порога для законов единичной дисперсии"""
        return {name: self.risk_curve(unit_variance_model(name), soft_expr(lam), xs)
                for name in FIGURE_MODELS}

    # ==================== ПРОВЕРКИ ====================

    def _quadrature_check(self, name: str, model: NoiseLaw, g_name: str, g: EstimatorExpr,
                          theta: float, kernel, tol: float) -> Dict[str, Any]:
        knots = [k - theta for k in g.knots()]
        lhs = expectation(model, lambda s: kernel(g, s + theta), knots, self.config)
        rhs = expectation(model, lambda s: s * g.evaluate(s + theta), knots, self.config)
        passed = abs(lhs - rhs) <= tol
        details = {'model': name, 'g': g_name, 'theta': theta, 'lhs': lhs, 'rhs': rhs,
                   'deviation': abs(lhs - rhs), 'tolerance': tol}
        self.journal.log_check('stein_quadrature', model.model_id, passed, details)
        return dict(details, method='quadrature', passed=passed)

    def _unbiasedness_check(self, name: str, model: NoiseLaw, d_name: str, expr: EstimatorExpr,
                            theta: float, kernel, tol: float) -> Dict[str, Any]:
        g = residual(expr)
        sigma2 = model.variance
        knots = [k - theta for k in expr.knots()]

        def estimate(s):
            y = s + theta
            gy = float(g.evaluate(y))
            return sigma2 + gy * gy + 2.0 * float(kernel(g, y))

        lhs = expectation(model, estimate, knots, self.config)
        rhs = expectation(model, lambda s: (expr.evaluate(s + theta) - theta) ** 2, knots, self.config)
        passed = abs(lhs - rhs) <= tol
        details = {'model': name, 'g': d_name, 'theta': theta, 'lhs': lhs, 'rhs': rhs,
                   'deviation': abs(lhs - rhs), 'tolerance': tol}
        self.journal.log_check('unbiasedness_quadrature', model.model_id, passed, details)
        return dict(details, method='unbiasedness', passed=passed)

    def _mc_check(self, name: str, model: NoiseLaw, g_name: str, g: EstimatorExpr, theta: float,
                  kernel, samples: int, seed: int, k_se: float, workers: Optional[int]) -> Dict[str, Any]:
        check = mc_stein_check(model, g, theta, samples, seed, kernel=kernel,
                               workers=workers, config=self.config)
        passed = check.passed(k_se)
        details = {'model': name, 'g': g_name, 'theta': theta, 'lhs': check.lhs, 'rhs': check.rhs,
                   'se': check.se, 'n': check.n, 'z': check.z_score, 'k_se': k_se}
        self.journal.log_check('stein_mc', model.model_id, passed, details)
        return dict(details, method='monte_carlo', passed=passed)

    def verify(self, models: Optional[Dict[str, NoiseLaw]] = None,
               thetas: Sequence[float] = DEFAULT_THETAS,
               functions: Optional[Dict[str, EstimatorExpr]] = None,
               estimators: Optional[Dict[str, EstimatorExpr]] = None,
               samples: Optional[int] = None, seed: Optional[int] = None,
               corrupt_kernel: bool = False, quad_tol: float = 1e-6, k_se: float = 4.0,
               workers: Optional[int] = None) -> Dict[str, Any]:
        """
        Проверка E K(g)(X+θ) = E X g(X+θ) по матрице (закон, θ, g)

        Args:
            models: Законы (по умолчанию normal, laplace, gamma(2), sech)
            thetas: Значения θ
            functions: Остатки g
            estimators: Оценки d для квадратурной проверки несмещённости E r^ = E(d - θ)²
            samples: Размер выборки Монте-Карло (0 - только квадратура)
            seed: Зерно
            corrupt_kernel: Заменить K на -K (проверка самой проверки)

        Returns:
            Dict: {'passed', 'cells', 'journal'}
        """
        models = models or default_verify_models()
        functions = default_verify_functions() if functions is None else functions
        estimators = default_verify_estimators() if estimators is None else estimators
        samples = self.config.mc_samples if samples is None else samples
        seed = self.config.mc_seed if seed is None else seed
        cells: List[Dict[str, Any]] = []
        start = len(self.journal)

        def run(check, name: str, model: NoiseLaw, label: str, theta: float):
            try:
                cells.append(check())
            except QuadratureError as e:
                self._stats['errors'] += 1
                self.journal.log_check('stein_quadrature', model.model_id, False,
                                       {'model': name, 'g': label, 'theta': theta, 'error': str(e)})
                cells.append({'model': name, 'g': label, 'theta': theta,
                              'method': 'quadrature', 'passed': False, 'error': str(e)})

        for name, model in models.items():
            self._touch(model)
            if corrupt_kernel:
                kernel = lambda g, x, model=model: -apply_stein(model, g, x)
            else:
                kernel = lambda g, x, model=model: apply_stein(model, g, x)
            for theta in thetas:
                for g_name, g in functions.items():
                    if model.has_density:
                        run(lambda: self._quadrature_check(name, model, g_name, g, theta, kernel, quad_tol),
                            name, model, g_name, theta)
                    if samples:
                        cells.append(self._mc_check(name, model, g_name, g, theta, kernel,
                                                    samples, seed, k_se, workers))
                if model.has_density:
                    for d_name, expr in estimators.items():
                        run(lambda: self._unbiasedness_check(name, model, d_name, expr, theta, kernel, quad_tol),
                            name, model, d_name, theta)

        failed = sum(1 for c in cells if not c['passed'])
        self._stats['checks_run'] += len(cells)
        self._stats['checks_failed'] += failed
        if failed:
            logger.warning("Проверка Штейна: %d из %d ячеек не прошли", failed, len(cells))
        return {
            'passed': failed == 0,
            'corrupt_kernel': corrupt_kernel,
            'samples': samples,
            'seed': seed,
            'cells': cells,
            'journal': {'entries': len(self.journal) - start, 'failed': failed},
        }

    # ==================== ПОРОГИ ====================

    def select_threshold(self, coeffs, model: NoiseLaw, n_total: Optional[int] = None,
                         subsample: bool = False) -> ThresholdChoice:
        """Порог SureShrink для одного массива коэффициентов"""
        try:
            choice = sure_select(coeffs, model, n_total, subsample=subsample, config=self.config)
        except SteinError as e:
            self._stats['errors'] += 1
            self.journal.log_check('select_threshold', model.model_id, False, {'error': str(e)})
            raise
        self._stats['thresholds_selected'] += 1
        self.journal.log_check('select_threshold', model.model_id, True, choice.to_dict())
        return choice

    def denoise(self, signal, wavelet: str, levels: int, model: NoiseLaw, keep_low_levels: int = 1,
                fixed_lambda: Optional[float] = None, subsample: bool = False,
                workers: Optional[int] = None) -> Tuple[np.ndarray, List[ThresholdChoice]]:
        """Шумоподавление с отчётом по полосам"""
        try:
            result, report = denoise(signal, wavelet, levels, model, keep_low_levels,
                                     fixed_lambda=fixed_lambda, subsample=subsample,
                                     workers=workers, config=self.config)
        except SteinError as e:
            self._stats['errors'] += 1
            self.journal.log_check('denoise', model.model_id, False, {'error': str(e)})
            raise
        self._stats['thresholds_selected'] += sum(1 for c in report if c.risk is not None)
        self.journal.log_check('denoise', model.model_id, True,
                               {'wavelet': wavelet, 'levels': levels, 'bands': len(report)})
        return result, report

    # ==================== СТАТИСТИКА ====================

    def get_statistics(self) -> Dict[str, Any]:
        return {
            'sure_system': dict(self._stats),
            'journal': self.journal.summary(),
            'timestamp': datetime.now().isoformat(),
        }

    def get_entries(self, filters: Optional[Dict[str, Any]] = None,
                    limit: int = 1000, offset: int = 0) -> List[Dict[str, Any]]:
        return self.journal.get_entries(filters, limit, offset)


_sure_system_instance = None


def get_sure_system(config: Optional[SteinConfig] = None) -> SureSystem:
    """
    Экземпляр системы (создаётся при первом вызове)

    Args:
        config: Конфигурация; при повторном вызове с другой конфигурацией система пересоздаётся
    """
    global _sure_system_instance
    if _sure_system_instance is None or (config is not None and config != _sure_system_instance.config):
        _sure_system_instance = SureSystem(config)
    return _sure_system_instance


if __name__ == "__main__":
    print("🧪 Демонстрация SureSystem")
    print("=" * 60)

    system = SureSystem()

    try:
        print("1. Кривые риска мягкого порога λ=2...")
        xs = np.linspace(-6, 6, 7)
        for name, curve in system.figure(xs).items():
            print(f"   ✅ {name}: r^(0) = {curve.risk[3]:.6f}")

        print("2. Проверка тождества Штейна (квадратура)...")
        report = system.verify(thetas=(0.7,), samples=0)
        print(f"   ✅ Пройдено: {report['passed']} ({len(report['cells'])} ячеек)")

        print("3. Выбор порога для шума Лапласа...")
        rng = np.random.default_rng(1)
        coeffs = rng.laplace(scale=1 / math.sqrt(2), size=1024)
        choice = system.select_threshold(coeffs, LaplaceNoise(1.0))
        print(f"   ✅ λ = {choice.lambda_:.6f}, R^ = {choice.risk:.3f}")

        stats = system.get_statistics()
        print(f"   📊 Оценок риска: {stats['sure_system']['risk_evaluations']}")
        print(f"   📊 Проверок: {stats['sure_system']['checks_run']}")

        print("\n" + "=" * 60)
        print("🎉 Система оценки риска работает корректно!")

    except Exception as e:
        print(f"❌ Ошибка: {type(e).__name__}: {e}")
        import traceback
        traceback.print_exc()
