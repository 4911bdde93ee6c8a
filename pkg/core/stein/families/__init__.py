"""
Конкретные законы шума
"""

from .normal import NormalNoise
from .laplace import LaplaceNoise, laplace_hinge, laplace_convolution_kernel
from .gamma import GammaNoise
from .sech import SechNoise, sech_hinge
from .uniform import UniformNoise, uniform_h, uniform_r
from .compound_poisson import CompoundPoissonNoise, JumpLaw, CompoundJumpDensity
from .generic import (
    GenericIDNoise, LevyTripleNoise, PowerExponentialDensity, TabulatedDensity,
    measure_from_dict, measure_to_dict
)

__all__ = [
    'NormalNoise', 'LaplaceNoise', 'GammaNoise', 'SechNoise', 'UniformNoise',
    'CompoundPoissonNoise', 'JumpLaw', 'CompoundJumpDensity',
    'GenericIDNoise', 'LevyTripleNoise', 'PowerExponentialDensity', 'TabulatedDensity',
    'laplace_hinge', 'laplace_convolution_kernel', 'sech_hinge', 'uniform_h', 'uniform_r',
    'measure_from_dict', 'measure_to_dict',
]
