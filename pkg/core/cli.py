"""
Командная строка SURE-ID

Команды:
    risk-curve        кривая r^(x) на сетке (CSV или JSON)
    verify            проверка тождества Штейна и несмещённости по матрице
    select-threshold  порог SureShrink для столбца коэффициентов
    denoise           вейвлет-шумоподавление сигнала
    figure            кривые мягкого порога для четырёх законов единичной дисперсии

Приоритет настроек: флаги > JSON-файл (--config) > значения по умолчанию.

Пример:
    python -m core risk-curve --model laplace --lambda 2 --out laplace.csv
"""

import os
import re
import sys
import json
import logging
import argparse
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Dict, Any, List

import numpy as np

from .stein.types import SteinConfig, SteinError, ConfigError, RiskCurve
from .stein.interfaces import NoiseLaw
from .stein.estimators import EstimatorExpr, soft_expr, mid_expr, residual
from .stein.noise_models import load_model, unit_variance_model
from .stein.wavelets import WAVELETS, denoise_report
from .sure_system import SureSystem, FIGURE_MODELS

logger = logging.getLogger(__name__)

COMMANDS = ('risk-curve', 'verify', 'select-threshold', 'denoise', 'figure')
_GAMMA_NAME = re.compile(r'^gamma\(\s*([0-9.eE+-]+)\s*\)$')


@dataclass
class RunConfig:
    """Полностью проверенные параметры одного запуска"""
    command: str
    model: Optional[str] = None
    estimator: str = "soft"
    lambda_: Optional[float] = None
    range: str = "-6:6:0.01"
    theta: Optional[float] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    wavelet: str = "haar"
    levels: int = 4
    keep_low: int = 1
    out: Optional[str] = None
    format: str = "csv"
    input: Optional[str] = None
    n_total: Optional[int] = None
    workers: Optional[int] = None
    subsample: bool = False
    fixed_lambda: Optional[float] = None
    report: Optional[str] = None
    corrupt_kernel: bool = False
    stein: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Неизвестная команда: {self.command!r}")
        if self.estimator not in ('soft', 'mid'):
            raise ConfigError(f"Неизвестная оценка: {self.estimator!r}; доступны soft, mid")
        if self.wavelet not in WAVELETS:
            raise ConfigError(f"Неизвестный вейвлет: {self.wavelet!r}; доступны {sorted(WAVELETS)}")
        if self.format not in ('csv', 'json'):
            raise ConfigError(f"Неизвестный формат: {self.format!r}")
        if self.lambda_ is not None and not self.lambda_ > 0:
            raise ConfigError(f"Порог должен быть > 0: {self.lambda_}")
        if self.fixed_lambda is not None and not self.fixed_lambda >= 0:
            raise ConfigError(f"Фиксированный порог должен быть >= 0: {self.fixed_lambda}")
        if self.levels < 1:
            raise ConfigError(f"levels должен быть >= 1: {self.levels}")
        if self.keep_low < 0:
            raise ConfigError(f"keep_low должен быть >= 0: {self.keep_low}")
        if self.samples is not None and self.samples < 0:
            raise ConfigError(f"samples должен быть >= 0: {self.samples}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers должен быть >= 1: {self.workers}")
        if not isinstance(self.stein, dict):
            raise ConfigError("Секция stein должна быть объектом JSON")
        parse_range(self.range)

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls) if f.name != 'command']

    @classmethod
    def from_sources(cls, command: str, file_data: Optional[Dict[str, Any]] = None,
                     flags: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """
        Сборка конфигурации: значения по умолчанию, затем JSON-файл, затем флаги

        Raises:
            ConfigError: Неизвестные поля или недопустимые значения
        """
        values: Dict[str, Any] = {}
        for key, value in (file_data or {}).items():
            name = 'lambda_' if key == 'lambda' else key.replace('-', '_')
            if name not in cls.field_names():
                raise ConfigError(f"Неизвестное поле конфигурации: {key!r}")
            values[name] = value
        for key, value in (flags or {}).items():
            if value is not None:
                values[key] = value
        try:
            return cls(command=command, **values)
        except TypeError as e:
            raise ConfigError(f"Некорректная конфигурация: {str(e)}")

    def stein_config(self) -> SteinConfig:
        """Численная конфигурация: окружение, затем секция stein"""
        try:
            config = SteinConfig.from_env().with_overrides(**self.stein)
            if self.workers is not None:
                config = replace(config, workers=self.workers)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Некорректная секция stein: {str(e)}")
        return config


# ==================== РАЗБОР ЗНАЧЕНИЙ ====================

def parse_range(text: str) -> np.ndarray:
    """
    Сетка 'a:b:step' включая правый конец

    Raises:
        ConfigError: Неверный формат или шаг
    """
    try:
        a, b, step = (float(part) for part in str(text).split(':'))
    except ValueError:
        raise ConfigError(f"Диапазон должен иметь вид a:b:step: {text!r}")
    if not step > 0 or b < a:
        raise ConfigError(f"Пустой диапазон или неположительный шаг: {text!r}")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(count)


def parse_model(spec: Optional[str]) -> NoiseLaw:
    """Имя закона (единичная дисперсия), 'gamma(t)', JSON-строка или путь к JSON"""
    spec = spec or 'normal'
    match = _GAMMA_NAME.match(spec.strip())
    if match:
        return unit_variance_model('gamma', float(match.group(1)))
    return load_model(spec)


def make_estimator(kind: str, lam: float) -> EstimatorExpr:
    return soft_expr(lam) if kind == 'soft' else mid_expr(lam)


def read_values(path: Optional[str]) -> np.ndarray:
    """
    Столбец 'value' из CSV-файла

    Raises:
        ConfigError: Нет файла, нет колонки value или нечисловые данные
    """
    if not path:
        raise ConfigError("Не задан входной файл (--input)")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            header = [name.strip() for name in f.readline().strip().split(',')]
            if 'value' not in header:
                raise ConfigError(f"В {path} нет колонки value")
            data = np.loadtxt(f, delimiter=',', usecols=header.index('value'), ndmin=1)
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать {path}: {str(e)}")
    except ValueError as e:
        raise ConfigError(f"Некорректные данные в {path}: {str(e)}")
    return np.asarray(data, dtype=float)


# ==================== ВЫВОД ====================

def _fmt(value: float, digits: int) -> str:
    return f"{float(value):.{digits}g}"


def curve_csv(curve: RiskCurve, digits: int = 17) -> str:
    lines = [','.join(RiskCurve.COLUMNS)]
    for row in curve.rows():
        lines.append(','.join(_fmt(v, digits) for v in row))
    return '\n'.join(lines) + '\n'


def curve_json(curve: RiskCurve) -> str:
    rows = [dict(zip(RiskCurve.COLUMNS, map(float, row))) for row in curve.rows()]
    return json.dumps({'model_id': curve.model_id, 'estimator_id': curve.estimator_id,
                       'rows': rows}, indent=2)


def values_csv(values: np.ndarray, digits: int = 17) -> str:
    return 'value\n' + ''.join(_fmt(v, digits) + '\n' for v in values)


def write_output(text: str, path: Optional[str]):
    """Запись в файл или в stdout; запись ведёт один поток"""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)


# ==================== КОМАНДЫ ====================

def cmd_risk_curve(run: RunConfig, system: SureSystem) -> int:
    model = parse_model(run.model)
    expr = make_estimator(run.estimator, 2.0 if run.lambda_ is None else run.lambda_)
    curve = system.risk_curve(model, expr, parse_range(run.range))
    digits = system.config.output_digits
    write_output(curve_csv(curve, digits) if run.format == 'csv' else curve_json(curve), run.out)
    return 0


def cmd_verify(run: RunConfig, system: SureSystem) -> int:
    kwargs: Dict[str, Any] = {}
    if run.model is not None:
        kwargs['models'] = {run.model: parse_model(run.model)}
    if run.theta is not None:
        kwargs['thetas'] = (run.theta,)
    if run.lambda_ is not None:
        expr = make_estimator(run.estimator, run.lambda_)
        kwargs['estimators'] = {expr.label: expr}
        kwargs['functions'] = {expr.label: residual(expr)}
    report = system.verify(samples=run.samples, seed=run.seed, corrupt_kernel=run.corrupt_kernel,
                           workers=run.workers, **kwargs)
    write_output(json.dumps(report, indent=2) + '\n', run.out)
    if not report['passed']:
        logger.error("Проверка не пройдена")
        return 1
    return 0


def cmd_select_threshold(run: RunConfig, system: SureSystem) -> int:
    coeffs = read_values(run.input)
    choice = system.select_threshold(coeffs, parse_model(run.model), run.n_total, subsample=run.subsample)
    write_output(json.dumps(choice.to_dict(), indent=2) + '\n', run.out)
    return 0


def cmd_denoise(run: RunConfig, system: SureSystem) -> int:
    signal = read_values(run.input)
    result, report = system.denoise(signal, run.wavelet, run.levels, parse_model(run.model),
                                    keep_low_levels=run.keep_low, fixed_lambda=run.fixed_lambda,
                                    subsample=run.subsample, workers=run.workers)
    write_output(values_csv(result, system.config.output_digits), run.out)
    report_path = run.report or (run.out + '.report.json' if run.out else None)
    if report_path:
        write_output(json.dumps(denoise_report(report), indent=2) + '\n', report_path)
    return 0


def cmd_figure(run: RunConfig, system: SureSystem) -> int:
    lam = 2.0 if run.lambda_ is None else run.lambda_
    out_dir = run.out or 'figure'
    curves = system.figure(parse_range(run.range), lam)
    digits = system.config.output_digits
    for name in FIGURE_MODELS:
        path = os.path.join(out_dir, f"risk_{name}.csv")
        write_output(curve_csv(curves[name], digits), path)
        logger.info("Кривая %s записана в %s", name, path)
    return 0


_HANDLERS = {
    'risk-curve': cmd_risk_curve,
    'verify': cmd_verify,
    'select-threshold': cmd_select_threshold,
    'denoise': cmd_denoise,
    'figure': cmd_figure,
}


def _parse_args(args, **kw):
    """Разбор аргументов командной строки для `main`"""
    p = argparse.ArgumentParser(prog='python -m core',
                                description='Несмещённая оценка риска для безгранично делимого шума')
    p.add_argument('command', choices=COMMANDS, help='команда')
    p.add_argument('--config', help='JSON-файл конфигурации запуска')
    p.add_argument('--model', help='normal|laplace|gamma|gamma(t)|sech|uniform, JSON-строка или путь к JSON')
    p.add_argument('--estimator', choices=['soft', 'mid'], help='правило порога')
    p.add_argument('--lambda', dest='lambda_', type=float, help='порог (по умолчанию 2)')
    p.add_argument('--range', help='сетка x в виде a:b:step (по умолчанию -6:6:0.01)')
    p.add_argument('--theta', type=float, help='единственное значение θ для verify')
    p.add_argument('--samples', type=int, help='размер выборки Монте-Карло (0 - без Монте-Карло)')
    p.add_argument('--seed', type=int, help='зерно генератора')
    p.add_argument('--wavelet', choices=sorted(WAVELETS), help='вейвлет')
    p.add_argument('--levels', type=int, help='глубина разложения')
    p.add_argument('--keep-low', dest='keep_low', type=int, help='число грубых полос без порога')
    p.add_argument('--fixed-lambda', dest='fixed_lambda', type=float, help='фиксированный порог вместо SURE')
    p.add_argument('--input', help='входной CSV с колонкой value')
    p.add_argument('--n-total', dest='n_total', type=int, help='длина сигнала для порога λ_max')
    p.add_argument('--subsample', action='store_true', default=None, help='ограничить число кандидатов порога')
    p.add_argument('--workers', type=int, help='число потоков')
    p.add_argument('--corrupt-kernel', dest='corrupt_kernel', action='store_true', default=None,
                   help='заменить K на -K (проверка должна упасть)')
    p.add_argument('--out', help='выходной файл (для figure - каталог)')
    p.add_argument('--report', help='JSON-отчёт denoise')
    p.add_argument('--format', choices=['csv', 'json'], help='формат кривой риска')
    p.add_argument('-v', '--verbose', action='store_true', help='подробный журнал')
    return p.parse_args(args, argparse.Namespace(**kw))


def _load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать конфигурацию {path}: {str(e)}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Некорректный JSON в {path}: {str(e)}")
    if not isinstance(data, dict):
        raise ConfigError("Конфигурация должна быть объектом JSON")
    return data


def build_run_config(args: argparse.Namespace) -> RunConfig:
    flags = {name: getattr(args, name, None) for name in RunConfig.field_names() if name != 'stein'}
    return RunConfig.from_sources(args.command, _load_config_file(args.config), flags)


def main(args=None, **kw) -> int:
    """
    Точка входа командной строки

    Returns:
        0 - успех, 1 - проверка verify не пройдена, 2 - ошибка конфигурации или вычислений
    """
    args = _parse_args(args, **kw)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        run = build_run_config(args)
        system = SureSystem(run.stein_config())
        return _HANDLERS[run.command](run, system)
    except SteinError as e:
        print(f"Ошибка: {e}", file=sys.stderr)
        return 2
