# bench_denoise.py
"""
Замер производительности шумоподавления и проверки Штейна
"""
import time
import os

import sys
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pywt

from core.sure_system import SureSystem
from core.stein.types import SteinConfig
from core.stein.families import LaplaceNoise, GammaNoise
from core.stein.noise_models import convolve
from core.stein.estimators import soft_expr
from core.stein.wavelets import dwt, propagate_noise


def _blocks(n):
    return pywt.data.demo_signal('Blocks', n)


def run_benchmark(n: int = 2 ** 14, workers: int = 4):
    print("🧪 Замер производительности SURE-ID")
    print("=" * 60)

    system = SureSystem(SteinConfig(workers=workers))
    rng = np.random.default_rng(1)
    noise = LaplaceNoise(0.5)

    try:
        # 1. Кривая риска на плотной сетке
        print("1. Кривая риска Лапласа на 12001 точке...")
        start = time.time()
        curve = system.risk_curve(LaplaceNoise(1.0), soft_expr(2.0), np.linspace(-6, 6, 12001))
        elapsed = time.time() - start
        print(f"   ✅ {len(curve)} точек за {elapsed:.3f} сек")

        # 2. Шарнирное ядро свёртки (табулированное)
        print("\n2. Ядро свёртки Лаплас + Гамма(2)...")
        start = time.time()
        mixed = convolve(LaplaceNoise(1.0), GammaNoise(2.0))
        curve = system.risk_curve(mixed, soft_expr(2.0), np.linspace(-6, 6, 1201))
        elapsed = time.time() - start
        print(f"   ✅ Таблица и {len(curve)} точек за {elapsed:.2f} сек")

        # 3. Распространение шума по уровням
        print("\n3. Распространение шума D4 по 5 уровням...")
        start = time.time()
        for level in range(1, 6):
            propagate_noise(noise, 'd4', level, n)
        elapsed = time.time() - start
        print(f"   ✅ 5 уровней за {elapsed:.3f} сек")

        # 4. Выбор порога
        print(f"\n4. Выбор порога SURE для {n} коэффициентов...")
        noisy = _blocks(n) + noise.sample_chunk(rng, n)
        finest = dwt(noisy, 'haar', 1).details[0]
        start = time.time()
        choice = system.select_threshold(finest.coeffs, propagate_noise(noise, 'haar', 1, n), n)
        elapsed = time.time() - start
        print(f"   ✅ λ = {choice.lambda_:.4f} ({choice.n_candidates} кандидатов) за {elapsed:.2f} сек")

        # 5. Полное шумоподавление
        print(f"\n5. Шумоподавление, {workers} потока...")
        start = time.time()
        out, report = system.denoise(noisy, 'haar', 6, noise, workers=workers)
        elapsed = time.time() - start
        mse_in = float(np.mean((noisy - _blocks(n)) ** 2))
        mse_out = float(np.mean((out - _blocks(n)) ** 2))
        print(f"   ✅ {len(report)} полос за {elapsed:.2f} сек")
        print(f"   📊 MSE: {mse_in:.4f} -> {mse_out:.4f}")

        # оракульный порог: минимум истинной ошибки по сетке
        best = min(
            (float(np.mean((system.denoise(noisy, 'haar', 6, noise, fixed_lambda=lam)[0] - _blocks(n)) ** 2)), lam)
            for lam in np.linspace(0.0, 3.0, 31)
        )
        print(f"   📊 Оракул: λ = {best[1]:.2f}, MSE = {best[0]:.4f}")

        # 6. Монте-Карло проверка
        print("\n6. Монте-Карло проверка (10⁶ выборок)...")
        start = time.time()
        result = system.verify(models={'laplace': LaplaceNoise(1.0)}, thetas=(0.7,),
                               samples=10 ** 6, seed=1, workers=workers)
        elapsed = time.time() - start
        print(f"   ✅ {len(result['cells'])} ячеек за {elapsed:.2f} сек, пройдено: {result['passed']}")

        stats = system.get_statistics()['sure_system']
        print(f"   📊 Оценок риска: {stats['risk_evaluations']}")
        print(f"   📊 Порогов выбрано: {stats['thresholds_selected']}")

        print("\n" + "=" * 60)
        print("🎉 Замер производительности завершён успешно!")

    except Exception as e:
        print(f"❌ Ошибка: {type(e).__name__}: {e}")
        import traceback
        traceback.print_exc()

        print("\n🔧 Отладочная информация:")
        summary = system.journal.summary()
        print(f"   Записей в журнале: {summary['total']}")
        for action, counts in summary['by_action'].items():
            print(f"   {action}: {counts['passed']} пройдено, {counts['failed']} с ошибкой")


if __name__ == "__main__":
    run_benchmark()
