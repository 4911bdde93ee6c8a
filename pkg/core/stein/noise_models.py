"""
Операции над законами шума

Преобразования законов повторяют правила для оператора K:
сдвиг, масштаб, свёртка и нормировка суммы n копий.
Здесь же разбор законов из JSON.
"""

import json
import math
import logging
from typing import Dict, Any, Union

import numpy as np

from .interfaces import NoiseLaw
from .types import (
    LevyTriple, UnsupportedModelError, PreconditionError, DegenerateLawError, ConfigError
)
from .families import (
    NormalNoise, LaplaceNoise, GammaNoise, SechNoise, UniformNoise,
    CompoundPoissonNoise, JumpLaw, GenericIDNoise, LevyTripleNoise,
    measure_from_dict
)

logger = logging.getLogger(__name__)

# Допуск "нулевого" среднего относительно стандартного отклонения
CENTER_TOL = 1e-12


def _require_id(model: NoiseLaw, action: str):
    if not model.is_infinitely_divisible:
        raise UnsupportedModelError(
            f"{action}: закон {model.family} не безгранично делим "
            f"(для равномерного шума есть отдельный путь через uniform_h)"
        )


def levy_view(model: NoiseLaw) -> LevyTriple:
    """
    Каноническая тройка (b, σ₀², M) закона

    Raises:
        UnsupportedModelError: Для равномерного закона
    """
    _require_id(model, "Тройка Леви")
    return model.levy_triple()


def char_multiplier(model: NoiseLaw, w) -> np.ndarray:
    """ψ(w), для которого K(g)^ = g^ * ψ"""
    _require_id(model, "Множитель ψ")
    return model.char_multiplier(w)


def char_function(model: NoiseLaw, w) -> np.ndarray:
    """Характеристическая функция E e^{iwX} (определена и для равномерного закона)"""
    return model.char_function(w)


def convolve(model_a: NoiseLaw, model_b: NoiseLaw) -> NoiseLaw:
    """
    Закон суммы независимых X_a + X_b

    Returns:
        NoiseLaw: Нормальный закон для двух нормальных, иначе свёртка компонент
    """
    _require_id(model_a, "Свёртка")
    _require_id(model_b, "Свёртка")
    return GenericIDNoise.combine([(1, model_a), (1, model_b)])


def scale(model: NoiseLaw, c: float) -> NoiseLaw:
    """
    Закон c*X

    Raises:
        DegenerateLawError: При c = 0
    """
    if c == 0 or not math.isfinite(c):
        raise DegenerateLawError(f"Недопустимый множитель масштаба: {c}")
    if c == 1:
        return model
    return model.scaled(c)


def shift(model: NoiseLaw, b: float) -> NoiseLaw:
    """Закон X + b"""
    if b == 0:
        return model
    return model.shifted(b)


def is_centered(model: NoiseLaw) -> bool:
    sd = math.sqrt(max(model.variance, 0.0))
    return abs(model.mean) <= CENTER_TOL * max(sd, 1.0)


def center(model: NoiseLaw) -> NoiseLaw:
    """Сдвиг закона к нулевому среднему"""
    return model if is_centered(model) else model.shifted(-model.mean)


def require_centered(model: NoiseLaw, action: str):
    if not is_centered(model):
        raise PreconditionError(
            f"{action}: нужен центрированный закон (среднее {model.mean:.6g}); "
            f"используйте shift(model, -mean)"
        )


def clt_normalize(model: NoiseLaw, n: int) -> NoiseLaw:
    """
    Закон (X₁ + ... + X_n)/√n

    Args:
        model: Центрированный безгранично делимый закон
        n: Число слагаемых

    Returns:
        NoiseLaw: n-кратная свёртка scale(model, 1/√n); дисперсия сохраняется
    """
    _require_id(model, "Нормировка ЦПТ")
    if int(n) != n or n < 1:
        raise PreconditionError(f"n должно быть натуральным: {n}")
    require_centered(model, "Нормировка ЦПТ")
    if n == 1:
        return model
    return GenericIDNoise.combine([(int(n), model.scaled(1.0 / math.sqrt(n)))])


# ==================== JSON ====================

_FAMILY_FIELDS = {
    'normal': {'variance', 'sd'},
    'laplace': {'variance'},
    'gamma': {'shape'},
    'sech': {'variance'},
    'uniform': {'halfwidth'},
    'compound_poisson': {'rate', 'jump'},
    'generic_id': {'components', 'drift', 'gaussian_var', 'jump_measure'},
}

_COMMON_FIELDS = {'family', 'scale', 'shift', 'params'}


def _base_model(family: str, data: Dict[str, Any]) -> NoiseLaw:
    if family == 'normal':
        if 'sd' in data and 'variance' in data:
            raise ConfigError("Задайте либо variance, либо sd")
        variance = float(data['sd']) ** 2 if 'sd' in data else float(data.get('variance', 1.0))
        return NormalNoise(variance)
    if family == 'laplace':
        return LaplaceNoise(math.sqrt(float(data.get('variance', 1.0))))
    if family == 'gamma':
        return GammaNoise(float(data.get('shape', 1.0)))
    if family == 'sech':
        return SechNoise(math.sqrt(float(data.get('variance', 1.0))))
    if family == 'uniform':
        return UniformNoise(float(data.get('halfwidth', 1.0)))
    if family == 'compound_poisson':
        if 'rate' not in data:
            raise ConfigError("compound_poisson: не задан rate")
        jump = JumpLaw.from_dict(data.get('jump', {'kind': 'normal', 'mean': 0.0, 'sd': 1.0}))
        return CompoundPoissonNoise(float(data['rate']), jump)
    if 'components' in data:
        if {'drift', 'gaussian_var', 'jump_measure'} & set(data):
            raise ConfigError("generic_id: components нельзя смешивать с тройкой")
        items = []
        for item in data['components']:
            unknown = set(item) - {'multiplicity', 'model'}
            if unknown:
                raise ConfigError(f"Неизвестные поля компоненты: {sorted(unknown)}")
            items.append((int(item.get('multiplicity', 1)), model_from_dict(item['model'])))
        return GenericIDNoise.combine(items)
    triple = LevyTriple(
        drift_b=float(data.get('drift', 0.0)),
        gaussian_var=float(data.get('gaussian_var', 0.0)),
        jump_measure=measure_from_dict(data.get('jump_measure', {})),
    )
    return LevyTripleNoise(triple)


def model_from_dict(data: Dict[str, Any]) -> NoiseLaw:
    """
    Закон шума из JSON-словаря

    Формат: {"family": ..., параметры семейства, "scale": c, "shift": b};
    scale и shift применяются после построения базового закона.

    Raises:
        ConfigError: Неизвестное семейство или лишние поля
    """
    if not isinstance(data, dict):
        raise ConfigError("Описание закона должно быть объектом JSON")
    family = data.get('family')
    if family not in _FAMILY_FIELDS:
        raise ConfigError(f"Неизвестное семейство шума: {family!r}")
    # to_dict именованных семейств кладёт параметры в корень; params допускается для совместимости
    fields = dict(data.get('params', {}))
    fields.update({k: v for k, v in data.items() if k != 'params'})
    unknown = set(fields) - _COMMON_FIELDS - _FAMILY_FIELDS[family]
    if unknown:
        raise ConfigError(f"Неизвестные поля закона {family}: {sorted(unknown)}")
    try:
        model = _base_model(family, fields)
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"Некорректные параметры закона {family}: {str(e)}")
    if 'scale' in fields:
        model = scale(model, float(fields['scale']))
    if 'shift' in fields:
        model = shift(model, float(fields['shift']))
    return model


def model_to_dict(model: NoiseLaw) -> Dict[str, Any]:
    return model.to_dict()


UNIT_VARIANCE_MODELS = ('normal', 'laplace', 'gamma', 'sech', 'uniform')


def unit_variance_model(name: str, gamma_shape: float = 2.0) -> NoiseLaw:
    """
    Центрированный закон единичной дисперсии по имени

    gamma масштабируется на 1/√t, uniform имеет полуширину √3.
    """
    if name == 'normal':
        return NormalNoise(1.0)
    if name == 'laplace':
        return LaplaceNoise(1.0)
    if name == 'gamma':
        return GammaNoise(gamma_shape).scaled(1.0 / math.sqrt(gamma_shape))
    if name == 'sech':
        return SechNoise(1.0)
    if name == 'uniform':
        return UniformNoise(math.sqrt(3.0))
    raise ConfigError(f"Неизвестное имя закона: {name!r}; доступны {UNIT_VARIANCE_MODELS}")


def load_model(spec: Union[str, Dict[str, Any]]) -> NoiseLaw:
    """
    Закон по имени, JSON-строке или пути к JSON-файлу

    Args:
        spec: 'laplace', '{"family": "gamma", "shape": 2}' или 'model.json'
    """
    if isinstance(spec, dict):
        return model_from_dict(spec)
    text = spec.strip()
    if text in UNIT_VARIANCE_MODELS:
        return unit_variance_model(text)
    if text.startswith('{'):
        try:
            return model_from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Некорректный JSON закона: {str(e)}")
    try:
        with open(text, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Закон {text!r}: не имя семейства и не файл")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Некорректный JSON в {text}: {str(e)}")
    return model_from_dict(data)
