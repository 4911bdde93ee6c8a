"""
Подсистема несмещённой оценки риска Штейна для безгранично делимого шума
"""

from .types import (
    MeasurePart, MeasureSpec, LevyTriple, RiskEstimate, RiskCurve, ExpectedRisk,
    SampleBatch, SteinCheck, TransformationReport, LevelCoeffs, Decomposition, ThresholdChoice,
    SteinConfig, get_default_config, set_default_config,
    SteinError, UnsupportedModelError, PreconditionError, DegenerateLawError,
    QuadratureError, SamplingError, WaveletError, ThresholdSelectionError,
    ConfigError, SpectralWrapError
)
from .interfaces import NoiseLaw

__all__ = [
    'MeasurePart',
    'MeasureSpec',
    'LevyTriple',
    'RiskEstimate',
    'RiskCurve',
    'ExpectedRisk',
    'SampleBatch',
    'SteinCheck',
    'TransformationReport',
    'LevelCoeffs',
    'Decomposition',
    'ThresholdChoice',
    'SteinConfig',
    'get_default_config',
    'set_default_config',
    'NoiseLaw',
    'SteinError',
    'UnsupportedModelError',
    'PreconditionError',
    'DegenerateLawError',
    'QuadratureError',
    'SamplingError',
    'WaveletError',
    'ThresholdSelectionError',
    'ConfigError',
    'SpectralWrapError',
]
