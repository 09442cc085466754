"""Mechanics on skew-symmetric algebroids: almost differentials, linear almost Poisson brackets,
nonholonomic dynamics, Hamilton-Jacobi checks, nonholonomy analysis and reduction morphisms."""

__version__ = "0.1.0"

from .errors import InputError, NumericalError, SkewMechError
from .models import LoadedModel, ModelLoader

__all__ = ["InputError", "LoadedModel", "ModelLoader", "NumericalError", "SkewMechError", "__version__"]
