"""
SURE-ID - несмещённая оценка риска Штейна для безгранично делимого шума
"""

__version__ = "0.3.0"
__author__ = "lms"
